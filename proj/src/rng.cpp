#include "medlink/rng.hpp"

#include <cmath>

#include "medlink/util.hpp"

namespace medlink {

double Rng::normal(double mean, double stddev) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

Rng Rng::fork(std::string_view label) const {
    return Rng(state_ ^ fnv1a64(label));
}

}  // namespace medlink
