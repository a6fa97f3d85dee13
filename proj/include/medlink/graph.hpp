#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "medlink/rng.hpp"

namespace medlink::ad {

// Dense row-major matrix. Rank is at most 2 everywhere in the model; a row
// vector is [1 x n] and a scalar is [1 x 1].
template <typename Real>
struct Mat {
    int rows = 0, cols = 0;
    std::vector<Real> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, Real(0)) {}
    Mat(int r, int c, std::vector<Real> values) : rows(r), cols(c), a(std::move(values)) {
        if (a.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("Mat: data length does not match shape");
    }

    Real& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    Real at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return a.size(); }

    template <typename Other>
    Mat<Other> cast() const {
        Mat<Other> out(rows, cols);
        for (std::size_t i = 0; i < a.size(); i++) out.a[i] = static_cast<Other>(a[i]);
        return out;
    }

    bool finite() const {
        for (Real v : a)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

enum class Op : std::uint8_t {
    Leaf, MatMul, Transpose, Add, Sub, Mul, Div, AddRowVec, Scale, AddScalar,
    ConcatCols, ConcatRows, SliceCols, SoftmaxRows, Sigmoid, Tanh, Relu, Sqrt,
    MaxOverTime, MeanRows, Unfold, GatherRows, Dropout, SumAll,
};

// Reverse-mode tape over matrices. Nodes evaluate eagerly on creation and are
// stored in creation order; backward() walks them in exact reverse order, so
// a node's gradient is complete before its inputs consume it.
template <typename Real>
class Graph {
 public:
    using Id = int;

    struct Node {
        Op op = Op::Leaf;
        Mat<Real> value;
        Mat<Real> grad;           // allocated during backward
        bool needs_grad = false;
        Id in0 = -1, in1 = -1;
        std::vector<Id> in_list;  // concat inputs
        int i0 = 0, i1 = 0;       // op-specific (window, slice begin/len)
        Real scalar = Real(0);
        std::vector<int> idx;     // gather rows / max-over-time argmax rows
        std::vector<Real> mask;   // dropout keep-mask (already scaled)
    };

    Id leaf(Mat<Real> m, bool requires_grad) {
        Node n;
        n.op = Op::Leaf;
        n.value = std::move(m);
        n.needs_grad = requires_grad;
        return push(std::move(n));
    }

    Id scalar_leaf(Real v) { return leaf(Mat<Real>(1, 1, {v}), false); }

    Id matmul(Id a, Id b) {
        const Mat<Real>&A = val(a), &B = val(b);
        if (A.cols != B.rows)
            fail("matmul", A, B);
        Node n = binary(Op::MatMul, a, b, A.rows, B.cols);
        for (int i = 0; i < A.rows; i++) {
            const Real* arow = &A.a[static_cast<std::size_t>(i) * A.cols];
            Real* crow = &n.value.a[static_cast<std::size_t>(i) * B.cols];
            for (int k = 0; k < A.cols; k++) {
                Real aik = arow[k];
                if (aik == Real(0)) continue;
                const Real* brow = &B.a[static_cast<std::size_t>(k) * B.cols];
                for (int j = 0; j < B.cols; j++) crow[j] += aik * brow[j];
            }
        }
        return push(std::move(n));
    }

    Id transpose(Id a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::Transpose, a, A.cols, A.rows);
        for (int i = 0; i < A.rows; i++)
            for (int j = 0; j < A.cols; j++) n.value.at(j, i) = A.at(i, j);
        return push(std::move(n));
    }

    Id add(Id a, Id b) { return eltwise(Op::Add, a, b); }
    Id sub(Id a, Id b) { return eltwise(Op::Sub, a, b); }
    Id mul(Id a, Id b) { return eltwise(Op::Mul, a, b); }
    Id div(Id a, Id b) { return eltwise(Op::Div, a, b); }

    // A [r x c] plus row vector b [1 x c] broadcast over rows.
    Id add_rowvec(Id a, Id b) {
        const Mat<Real>&A = val(a), &B = val(b);
        if (B.rows != 1 || B.cols != A.cols) fail("add_rowvec", A, B);
        Node n = binary(Op::AddRowVec, a, b, A.rows, A.cols);
        for (int i = 0; i < A.rows; i++)
            for (int j = 0; j < A.cols; j++) n.value.at(i, j) = A.at(i, j) + B.at(0, j);
        return push(std::move(n));
    }

    Id scale(Id a, Real c) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::Scale, a, A.rows, A.cols);
        n.scalar = c;
        for (std::size_t i = 0; i < A.size(); i++) n.value.a[i] = A.a[i] * c;
        return push(std::move(n));
    }

    Id add_scalar(Id a, Real c) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::AddScalar, a, A.rows, A.cols);
        n.scalar = c;
        for (std::size_t i = 0; i < A.size(); i++) n.value.a[i] = A.a[i] + c;
        return push(std::move(n));
    }

    Id concat_cols(const std::vector<Id>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
        int rows = val(parts[0]).rows, cols = 0;
        for (Id p : parts) {
            if (val(p).rows != rows) fail("concat_cols", val(parts[0]), val(p));
            cols += val(p).cols;
        }
        Node n = nary(Op::ConcatCols, parts, rows, cols);
        int off = 0;
        for (Id p : parts) {
            const Mat<Real>& P = val(p);
            for (int i = 0; i < rows; i++)
                for (int j = 0; j < P.cols; j++) n.value.at(i, off + j) = P.at(i, j);
            off += P.cols;
        }
        return push(std::move(n));
    }

    Id concat_rows(const std::vector<Id>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
        int cols = val(parts[0]).cols, rows = 0;
        for (Id p : parts) {
            if (val(p).cols != cols) fail("concat_rows", val(parts[0]), val(p));
            rows += val(p).rows;
        }
        Node n = nary(Op::ConcatRows, parts, rows, cols);
        int off = 0;
        for (Id p : parts) {
            const Mat<Real>& P = val(p);
            for (int i = 0; i < P.rows; i++)
                for (int j = 0; j < cols; j++) n.value.at(off + i, j) = P.at(i, j);
            off += P.rows;
        }
        return push(std::move(n));
    }

    Id slice_cols(Id a, int begin, int count) {
        const Mat<Real>& A = val(a);
        if (begin < 0 || count < 1 || begin + count > A.cols)
            throw std::invalid_argument("slice_cols: range out of bounds");
        Node n = unary(Op::SliceCols, a, A.rows, count);
        n.i0 = begin;
        n.i1 = count;
        for (int i = 0; i < A.rows; i++)
            for (int j = 0; j < count; j++) n.value.at(i, j) = A.at(i, begin + j);
        return push(std::move(n));
    }

    // Numerically stable per-row softmax.
    Id softmax_rows(Id a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::SoftmaxRows, a, A.rows, A.cols);
        for (int i = 0; i < A.rows; i++) {
            Real mx = A.at(i, 0);
            for (int j = 1; j < A.cols; j++) mx = std::max(mx, A.at(i, j));
            Real sum = Real(0);
            for (int j = 0; j < A.cols; j++) {
                Real e = std::exp(A.at(i, j) - mx);
                n.value.at(i, j) = e;
                sum += e;
            }
            for (int j = 0; j < A.cols; j++) n.value.at(i, j) /= sum;
        }
        return push(std::move(n));
    }

    Id softmax_cols(Id a) { return transpose(softmax_rows(transpose(a))); }

    Id sigmoid(Id a) {
        return map(Op::Sigmoid, a, [](Real x) { return Real(1) / (Real(1) + std::exp(-x)); });
    }
    Id tanh(Id a) {
        return map(Op::Tanh, a, [](Real x) { return std::tanh(x); });
    }
    Id relu(Id a) {
        return map(Op::Relu, a, [](Real x) { return x > Real(0) ? x : Real(0); });
    }
    Id sqrt(Id a) {
        return map(Op::Sqrt, a, [](Real x) { return std::sqrt(x); });
    }

    // Column-wise max over rows: [T x F] -> [1 x F]. The first maximal row
    // wins, which keeps backward deterministic.
    Id max_over_time(Id a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::MaxOverTime, a, 1, A.cols);
        n.idx.assign(static_cast<std::size_t>(A.cols), 0);
        for (int j = 0; j < A.cols; j++) {
            Real best = A.at(0, j);
            int arg = 0;
            for (int i = 1; i < A.rows; i++)
                if (A.at(i, j) > best) {
                    best = A.at(i, j);
                    arg = i;
                }
            n.value.at(0, j) = best;
            n.idx[static_cast<std::size_t>(j)] = arg;
        }
        return push(std::move(n));
    }

    Id mean_rows(Id a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::MeanRows, a, 1, A.cols);
        for (int j = 0; j < A.cols; j++) {
            Real s = Real(0);
            for (int i = 0; i < A.rows; i++) s += A.at(i, j);
            n.value.at(0, j) = s / static_cast<Real>(A.rows);
        }
        return push(std::move(n));
    }

    // Sliding windows of `window` rows, flattened per output row. Sequences
    // shorter than the window are zero-padded at the tail, giving one row.
    Id unfold(Id a, int window) {
        const Mat<Real>& A = val(a);
        if (window < 1) throw std::invalid_argument("unfold: window must be >= 1");
        int out_rows = std::max(A.rows - window + 1, 1);
        Node n = unary(Op::Unfold, a, out_rows, window * A.cols);
        n.i0 = window;
        for (int r = 0; r < out_rows; r++)
            for (int w = 0; w < window; w++) {
                int src = r + w;
                if (src >= A.rows) break;  // zero padding
                for (int j = 0; j < A.cols; j++)
                    n.value.at(r, w * A.cols + j) = A.at(src, j);
            }
        return push(std::move(n));
    }

    // Y[r] = table[rows[r]]; duplicate indices accumulate gradient.
    Id gather_rows(Id table, const std::vector<int>& rows) {
        const Mat<Real>& T = val(table);
        if (rows.empty()) throw std::invalid_argument("gather_rows: no indices");
        for (int r : rows)
            if (r < 0 || r >= T.rows)
                throw std::invalid_argument("gather_rows: index out of range");
        Node n = unary(Op::GatherRows, table, static_cast<int>(rows.size()), T.cols);
        n.idx = rows;
        for (std::size_t i = 0; i < rows.size(); i++)
            for (int j = 0; j < T.cols; j++)
                n.value.at(static_cast<int>(i), j) = T.at(rows[i], j);
        return push(std::move(n));
    }

    // Inverted dropout: kept activations scale by 1/(1-rate) so inference
    // needs no rescaling. rate == 0 is the identity.
    Id dropout(Id a, double rate, Rng& rng) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: bad rate");
        if (rate == 0.0) return a;
        const Mat<Real>& A = val(a);
        Node n = unary(Op::Dropout, a, A.rows, A.cols);
        n.mask.resize(A.size());
        Real keep_scale = Real(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < A.size(); i++) {
            n.mask[i] = rng.next_double() >= rate ? keep_scale : Real(0);
            n.value.a[i] = A.a[i] * n.mask[i];
        }
        return push(std::move(n));
    }

    Id sum_all(Id a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::SumAll, a, 1, 1);
        Real s = Real(0);
        for (Real v : A.a) s += v;
        n.value.at(0, 0) = s;
        return push(std::move(n));
    }

    // --- composite helpers ---

    struct LstmWeights {
        Id wx, wh, b;  // [in x 4H], [H x 4H], [1 x 4H]; gate order i, f, g, o
        int hidden;
    };

    struct LstmState {
        Id h, c;
    };

    LstmState lstm_cell(Id x, LstmState s, const LstmWeights& w) {
        int H = w.hidden;
        Id gates = add_rowvec(add(matmul(x, w.wx), matmul(s.h, w.wh)), w.b);
        Id i = sigmoid(slice_cols(gates, 0, H));
        Id f = sigmoid(slice_cols(gates, H, H));
        Id g = tanh(slice_cols(gates, 2 * H, H));
        Id o = sigmoid(slice_cols(gates, 3 * H, H));
        Id c = add(mul(f, s.c), mul(i, g));
        Id h = mul(o, tanh(c));
        return {h, c};
    }

    // Runs the cell over a sequence of [1 x in] rows from a zero state.
    // Returns every hidden state in input order.
    std::vector<Id> lstm_run(const std::vector<Id>& xs, const LstmWeights& w) {
        LstmState s{leaf(Mat<Real>(1, w.hidden), false), leaf(Mat<Real>(1, w.hidden), false)};
        std::vector<Id> hs;
        hs.reserve(xs.size());
        for (Id x : xs) {
            s = lstm_cell(x, s, w);
            hs.push_back(s.h);
        }
        return hs;
    }

    // Differentiable cosine similarity of two row vectors, guarded at zero.
    Id cosine(Id a, Id b) {
        Id dot = sum_all(mul(a, b));
        Id na = sqrt(add_scalar(sum_all(mul(a, a)), Real(1e-12)));
        Id nb = sqrt(add_scalar(sum_all(mul(b, b)), Real(1e-12)));
        return div(dot, mul(na, nb));
    }

    // --- access & backward ---

    const Mat<Real>& val(Id id) const { return nodes_[check(id)].value; }
    const Mat<Real>& grad_of(Id id) const {
        const Node& n = nodes_[check(id)];
        if (n.grad.size() == 0)
            throw std::logic_error("grad_of: backward has not run over this node");
        return n.grad;
    }
    bool needs_grad(Id id) const { return nodes_[check(id)].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    bool all_finite() const {
        for (const auto& n : nodes_)
            if (!n.value.finite()) return false;
        return true;
    }

    void backward(Id loss) {
        Node& top = nodes_[check(loss)];
        if (top.value.rows != 1 || top.value.cols != 1)
            throw std::invalid_argument("backward: loss node must be a scalar");
        if (!top.needs_grad) return;  // nothing requires grad
        for (auto& n : nodes_)
            if (n.needs_grad) n.grad = Mat<Real>(n.value.rows, n.value.cols);
        top.grad.at(0, 0) = Real(1);
        for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; id--) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (!n.needs_grad || n.op == Op::Leaf) continue;
            backward_node(n);
        }
    }

 private:
    std::vector<Node> nodes_;

    Id push(Node&& n) {
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size()) - 1;
    }

    Id check(Id id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            throw std::logic_error("bad node id");
        return id;
    }

    Node unary(Op op, Id a, int rows, int cols) {
        Node n;
        n.op = op;
        n.in0 = check(a);
        n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
        n.value = Mat<Real>(rows, cols);
        return n;
    }

    Node binary(Op op, Id a, Id b, int rows, int cols) {
        Node n = unary(op, a, rows, cols);
        n.in1 = check(b);
        n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(b)].needs_grad;
        return n;
    }

    Node nary(Op op, const std::vector<Id>& parts, int rows, int cols) {
        Node n;
        n.op = op;
        n.in_list = parts;
        for (Id p : parts) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(check(p))].needs_grad;
        n.value = Mat<Real>(rows, cols);
        return n;
    }

    Id eltwise(Op op, Id a, Id b) {
        const Mat<Real>&A = val(a), &B = val(b);
        if (A.rows != B.rows || A.cols != B.cols) fail(op_name(op), A, B);
        Node n = binary(op, a, b, A.rows, A.cols);
        for (std::size_t i = 0; i < A.size(); i++) {
            switch (op) {
                case Op::Add: n.value.a[i] = A.a[i] + B.a[i]; break;
                case Op::Sub: n.value.a[i] = A.a[i] - B.a[i]; break;
                case Op::Mul: n.value.a[i] = A.a[i] * B.a[i]; break;
                case Op::Div: n.value.a[i] = A.a[i] / B.a[i]; break;
                default: throw std::logic_error("eltwise: bad op");
            }
        }
        return push(std::move(n));
    }

    template <typename Fn>
    Id map(Op op, Id a, Fn fn) {
        const Mat<Real>& A = val(a);
        Node n = unary(op, a, A.rows, A.cols);
        for (std::size_t i = 0; i < A.size(); i++) n.value.a[i] = fn(A.a[i]);
        return push(std::move(n));
    }

    static const char* op_name(Op op) {
        switch (op) {
            case Op::Leaf: return "leaf";
            case Op::MatMul: return "matmul";
            case Op::Transpose: return "transpose";
            case Op::Add: return "add";
            case Op::Sub: return "sub";
            case Op::Mul: return "mul";
            case Op::Div: return "div";
            case Op::AddRowVec: return "add_rowvec";
            case Op::Scale: return "scale";
            case Op::AddScalar: return "add_scalar";
            case Op::ConcatCols: return "concat_cols";
            case Op::ConcatRows: return "concat_rows";
            case Op::SliceCols: return "slice_cols";
            case Op::SoftmaxRows: return "softmax_rows";
            case Op::Sigmoid: return "sigmoid";
            case Op::Tanh: return "tanh";
            case Op::Relu: return "relu";
            case Op::Sqrt: return "sqrt";
            case Op::MaxOverTime: return "max_over_time";
            case Op::MeanRows: return "mean_rows";
            case Op::Unfold: return "unfold";
            case Op::GatherRows: return "gather_rows";
            case Op::Dropout: return "dropout";
            case Op::SumAll: return "sum_all";
        }
        return "?";
    }

    [[noreturn]] static void fail(const std::string& op, const Mat<Real>& a,
                                  const Mat<Real>& b) {
        throw std::invalid_argument(op + ": shape mismatch [" + std::to_string(a.rows) +
                                    "," + std::to_string(a.cols) + "] vs [" +
                                    std::to_string(b.rows) + "," + std::to_string(b.cols) +
                                    "]");
    }

    Mat<Real>* in_grad(Id id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        return n.needs_grad ? &n.grad : nullptr;
    }

    void backward_node(Node& n) {
        const Mat<Real>& g = n.grad;
        switch (n.op) {
            case Op::MatMul: {
                const Mat<Real>&A = nodes_[static_cast<std::size_t>(n.in0)].value,
                              &B = nodes_[static_cast<std::size_t>(n.in1)].value;
                if (Mat<Real>* da = in_grad(n.in0)) {
                    // dA += g . B^T
                    for (int i = 0; i < A.rows; i++)
                        for (int j = 0; j < B.cols; j++) {
                            Real gij = g.at(i, j);
                            if (gij == Real(0)) continue;
                            const Real* brow = &B.a[0];
                            for (int k = 0; k < A.cols; k++)
                                da->at(i, k) += gij * brow[static_cast<std::size_t>(k) * B.cols + j];
                        }
                }
                if (Mat<Real>* db = in_grad(n.in1)) {
                    // dB += A^T . g
                    for (int i = 0; i < A.rows; i++)
                        for (int k = 0; k < A.cols; k++) {
                            Real aik = A.at(i, k);
                            if (aik == Real(0)) continue;
                            for (int j = 0; j < B.cols; j++)
                                db->at(k, j) += aik * g.at(i, j);
                        }
                }
                break;
            }
            case Op::Transpose: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (int i = 0; i < g.rows; i++)
                        for (int j = 0; j < g.cols; j++) da->at(j, i) += g.at(i, j);
                break;
            }
            case Op::Add: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i];
                if (Mat<Real>* db = in_grad(n.in1))
                    for (std::size_t i = 0; i < g.size(); i++) db->a[i] += g.a[i];
                break;
            }
            case Op::Sub: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i];
                if (Mat<Real>* db = in_grad(n.in1))
                    for (std::size_t i = 0; i < g.size(); i++) db->a[i] -= g.a[i];
                break;
            }
            case Op::Mul: {
                const Mat<Real>&A = nodes_[static_cast<std::size_t>(n.in0)].value,
                              &B = nodes_[static_cast<std::size_t>(n.in1)].value;
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i] * B.a[i];
                if (Mat<Real>* db = in_grad(n.in1))
                    for (std::size_t i = 0; i < g.size(); i++) db->a[i] += g.a[i] * A.a[i];
                break;
            }
            case Op::Div: {
                const Mat<Real>&A = nodes_[static_cast<std::size_t>(n.in0)].value,
                              &B = nodes_[static_cast<std::size_t>(n.in1)].value;
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i] / B.a[i];
                if (Mat<Real>* db = in_grad(n.in1))
                    for (std::size_t i = 0; i < g.size(); i++)
                        db->a[i] -= g.a[i] * A.a[i] / (B.a[i] * B.a[i]);
                break;
            }
            case Op::AddRowVec: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i];
                if (Mat<Real>* db = in_grad(n.in1))
                    for (int i = 0; i < g.rows; i++)
                        for (int j = 0; j < g.cols; j++) db->at(0, j) += g.at(i, j);
                break;
            }
            case Op::Scale: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i] * n.scalar;
                break;
            }
            case Op::AddScalar: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i];
                break;
            }
            case Op::ConcatCols: {
                int off = 0;
                for (Id p : n.in_list) {
                    Mat<Real>* dp = in_grad(p);
                    const Mat<Real>& P = nodes_[static_cast<std::size_t>(p)].value;
                    if (dp)
                        for (int i = 0; i < P.rows; i++)
                            for (int j = 0; j < P.cols; j++) dp->at(i, j) += g.at(i, off + j);
                    off += P.cols;
                }
                break;
            }
            case Op::ConcatRows: {
                int off = 0;
                for (Id p : n.in_list) {
                    Mat<Real>* dp = in_grad(p);
                    const Mat<Real>& P = nodes_[static_cast<std::size_t>(p)].value;
                    if (dp)
                        for (int i = 0; i < P.rows; i++)
                            for (int j = 0; j < P.cols; j++) dp->at(i, j) += g.at(off + i, j);
                    off += P.rows;
                }
                break;
            }
            case Op::SliceCols: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (int i = 0; i < g.rows; i++)
                        for (int j = 0; j < g.cols; j++) da->at(i, n.i0 + j) += g.at(i, j);
                break;
            }
            case Op::SoftmaxRows: {
                if (Mat<Real>* da = in_grad(n.in0)) {
                    const Mat<Real>& y = n.value;
                    for (int i = 0; i < y.rows; i++) {
                        Real dot = Real(0);
                        for (int j = 0; j < y.cols; j++) dot += g.at(i, j) * y.at(i, j);
                        for (int j = 0; j < y.cols; j++)
                            da->at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
                    }
                }
                break;
            }
            case Op::Sigmoid: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) {
                        Real y = n.value.a[i];
                        da->a[i] += g.a[i] * y * (Real(1) - y);
                    }
                break;
            }
            case Op::Tanh: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) {
                        Real y = n.value.a[i];
                        da->a[i] += g.a[i] * (Real(1) - y * y);
                    }
                break;
            }
            case Op::Relu: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++)
                        if (n.value.a[i] > Real(0)) da->a[i] += g.a[i];
                break;
            }
            case Op::Sqrt: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++)
                        da->a[i] += g.a[i] / (Real(2) * n.value.a[i]);
                break;
            }
            case Op::MaxOverTime: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (int j = 0; j < g.cols; j++)
                        da->at(n.idx[static_cast<std::size_t>(j)], j) += g.at(0, j);
                break;
            }
            case Op::MeanRows: {
                if (Mat<Real>* da = in_grad(n.in0)) {
                    Real inv = Real(1) / static_cast<Real>(da->rows);
                    for (int i = 0; i < da->rows; i++)
                        for (int j = 0; j < g.cols; j++) da->at(i, j) += g.at(0, j) * inv;
                }
                break;
            }
            case Op::Unfold: {
                if (Mat<Real>* da = in_grad(n.in0)) {
                    int window = n.i0, cols = da->cols;
                    for (int r = 0; r < g.rows; r++)
                        for (int w = 0; w < window; w++) {
                            int src = r + w;
                            if (src >= da->rows) break;
                            for (int j = 0; j < cols; j++)
                                da->at(src, j) += g.at(r, w * cols + j);
                        }
                }
                break;
            }
            case Op::GatherRows: {
                if (Mat<Real>* dt = in_grad(n.in0))
                    for (std::size_t r = 0; r < n.idx.size(); r++)
                        for (int j = 0; j < g.cols; j++)
                            dt->at(n.idx[r], j) += g.at(static_cast<int>(r), j);
                break;
            }
            case Op::Dropout: {
                if (Mat<Real>* da = in_grad(n.in0))
                    for (std::size_t i = 0; i < g.size(); i++) da->a[i] += g.a[i] * n.mask[i];
                break;
            }
            case Op::SumAll: {
                if (Mat<Real>* da = in_grad(n.in0)) {
                    Real gv = g.at(0, 0);
                    for (std::size_t i = 0; i < da->size(); i++) da->a[i] += gv;
                }
                break;
            }
            case Op::Leaf:
                break;
        }
    }
};

}  // namespace medlink::ad
