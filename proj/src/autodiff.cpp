#include "cvc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cvc/errors.hpp"

namespace cvc {

Var Tape::leaf(Tensor value) { return node(std::move(value), nullptr); }

Var Tape::node(Tensor value, BackwardFn back) {
    Node n;
    n.grad = Tensor(value.shape());
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var root) {
    if (root.tape != this) throw ShapeMismatch("backward on a var from another tape");
    if (nodes_[root.id].value.size() != 1) {
        throw ShapeMismatch("backward root must be a scalar");
    }
    nodes_[root.id].grad[0] += 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, Var{this, i});
    }
}

namespace {

Tape& same_tape(Var a, Var b) {
    if (a.tape != b.tape || a.tape == nullptr) {
        throw ShapeMismatch("operands live on different tapes");
    }
    return *a.tape;
}

void require_rank1(const Tensor& t, const char* what) {
    if (t.rank() != 1) throw ShapeMismatch(std::string(what) + " requires a rank-1 operand");
}

} // namespace

Var matmul(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw ShapeMismatch("matmul operand shapes incompatible");
    }
    std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double aip = av.at(i, p);
            for (std::size_t j = 0; j < n; ++j) {
                out.at(i, j) += aip * bv.at(p, j);
            }
        }
    }
    return tape.node(std::move(out), [a, b, m, k, n](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        const Tensor& av2 = t.value(a);
        const Tensor& bv2 = t.value(b);
        Tensor& ga = t.grad(a);
        Tensor& gb = t.grad(b);
        // dA += dC * B^T
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += g.at(i, j) * bv2.at(p, j);
                ga.at(i, p) += acc;
            }
        }
        // dB += A^T * dC
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) acc += av2.at(i, p) * g.at(i, j);
                gb.at(p, j) += acc;
            }
        }
    });
}

Var matvec(Var a, Var x) {
    Tape& tape = same_tape(a, x);
    const Tensor& av = tape.value(a);
    const Tensor& xv = tape.value(x);
    if (av.rank() != 2 || xv.rank() != 1 || av.cols() != xv.size()) {
        throw ShapeMismatch("matvec operand shapes incompatible");
    }
    std::size_t m = av.rows(), k = av.cols();
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += av.at(i, p) * xv[p];
        out[i] = acc;
    }
    return tape.node(std::move(out), [a, x, m, k](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        const Tensor& av2 = t.value(a);
        const Tensor& xv2 = t.value(x);
        Tensor& ga = t.grad(a);
        Tensor& gx = t.grad(x);
        for (std::size_t i = 0; i < m; ++i) {
            double gi = g[i];
            for (std::size_t p = 0; p < k; ++p) {
                ga.at(i, p) += gi * xv2[p];
                gx[p] += gi * av2.at(i, p);
            }
        }
    });
}

Var add(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    if (!av.same_shape(bv)) throw ShapeMismatch("add operand shapes differ");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return tape.node(std::move(out), [a, b](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(a);
        Tensor& gb = t.grad(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
}

Var mul(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    if (!av.same_shape(bv)) throw ShapeMismatch("mul operand shapes differ");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return tape.node(std::move(out), [a, b](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        const Tensor& av2 = t.value(a);
        const Tensor& bv2 = t.value(b);
        Tensor& ga = t.grad(a);
        Tensor& gb = t.grad(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * bv2[i];
            gb[i] += g[i] * av2[i];
        }
    });
}

Var affine(Var a, double scale, double shift) {
    Tape& tape = *a.tape;
    const Tensor& av = tape.value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * av[i] + shift;
    return tape.node(std::move(out), [a, scale](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += scale * g[i];
    });
}

Var sigmoid(Var a) {
    Tape& tape = *a.tape;
    const Tensor& av = tape.value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
    return tape.node(std::move(out), [a](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var tanh(Var a) {
    Tape& tape = *a.tape;
    const Tensor& av = tape.value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
    return tape.node(std::move(out), [a](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var concat(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    require_rank1(av, "concat");
    require_rank1(bv, "concat");
    Tensor out({av.size() + bv.size()});
    std::copy(av.data(), av.data() + av.size(), out.data());
    std::copy(bv.data(), bv.data() + bv.size(), out.data() + av.size());
    std::size_t na = av.size();
    return tape.node(std::move(out), [a, b, na](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(a);
        Tensor& gb = t.grad(b);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        for (std::size_t i = na; i < g.size(); ++i) gb[i - na] += g[i];
    });
}

Var slice(Var a, std::size_t offset, std::size_t len) {
    Tape& tape = *a.tape;
    const Tensor& av = tape.value(a);
    require_rank1(av, "slice");
    if (offset + len > av.size()) throw ShapeMismatch("slice window out of range");
    Tensor out({len});
    std::copy(av.data() + offset, av.data() + offset + len, out.data());
    return tape.node(std::move(out), [a, offset, len](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < len; ++i) ga[offset + i] += g[i];
    });
}

Var embedding_lookup(Var table, std::size_t row) {
    Tape& tape = *table.tape;
    const Tensor& tv = tape.value(table);
    if (tv.rank() != 2) throw ShapeMismatch("embedding_lookup requires a rank-2 table");
    if (row >= tv.rows()) throw ShapeMismatch("embedding_lookup row out of range");
    std::size_t cols = tv.cols();
    Tensor out({cols});
    std::copy(tv.data() + row * cols, tv.data() + (row + 1) * cols, out.data());
    return tape.node(std::move(out), [table, row, cols](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        Tensor& gt = t.grad(table);
        for (std::size_t i = 0; i < cols; ++i) gt.at(row, i) += g[i];
    });
}

Var sum(Var a) {
    Tape& tape = *a.tape;
    const Tensor& av = tape.value(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
    return tape.node(Tensor::scalar(acc), [a](Tape& t, Var self) {
        double g = t.grad(self)[0];
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

Var softmax_cross_entropy(Var logits, std::size_t target) {
    Tape& tape = *logits.tape;
    const Tensor& lv = tape.value(logits);
    require_rank1(lv, "softmax_cross_entropy");
    if (lv.size() == 0) throw EmptyInput("softmax_cross_entropy of an empty vector");
    if (target >= lv.size()) throw ShapeMismatch("softmax_cross_entropy target out of range");
    double m = *std::max_element(lv.data(), lv.data() + lv.size());
    double sum_exp = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) sum_exp += std::exp(lv[i] - m);
    double loss = m + std::log(sum_exp) - lv[target];
    return tape.node(Tensor::scalar(loss), [logits, target, m, sum_exp](Tape& t, Var self) {
        double g = t.grad(self)[0];
        const Tensor& lv2 = t.value(logits);
        Tensor& gl = t.grad(logits);
        for (std::size_t i = 0; i < lv2.size(); ++i) {
            double p = std::exp(lv2[i] - m) / sum_exp;
            gl[i] += g * (p - (i == target ? 1.0 : 0.0));
        }
    });
}

} // namespace cvc
