#include "sentiflow/models/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "sentiflow/common/error.hpp"

namespace sentiflow::nn {

namespace {

thread_local bool g_grad_enabled = true;

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value, std::initializer_list<Var> parents) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    if (g_grad_enabled) {
        for (const auto& p : parents) {
            if (p.requires_grad()) {
                n->requires_grad = true;
                break;
            }
        }
    }
    if (n->requires_grad)
        for (const auto& p : parents) n->parents.push_back(p.ptr());
    return n;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape())
        throw ValidationError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                              shape_string(b.shape()));
}

template <typename F, typename DF>
Var unary(const Var& a, F f, DF df) {
    std::vector<double> v(a.size());
    const auto av = a.value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(av[i]);
    auto out = make_node(a.shape(), std::move(v), {a});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        o->backward = [o, pa, df] {
            auto& g = pa->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i] * df(pa->value[i], o->value[i]);
        };
    }
    return Var(out);
}

}  // namespace

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

std::vector<double>& Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Var constant(Shape shape, std::vector<double> values) {
    if (numel(shape) != values.size())
        throw ValidationError("constant: " + std::to_string(values.size()) + " values for shape " + shape_string(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    return Var(n);
}

Var zeros(Shape shape) {
    const auto n = numel(shape);
    return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Var leaf(Shape shape, std::vector<double> values) {
    Var v = constant(std::move(shape), std::move(values));
    v.node()->requires_grad = true;
    return v;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& loss) {
    if (loss.size() != 1) throw ValidationError("backward: loss must be a scalar");
    if (!loss.requires_grad()) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
    seen.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.node()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward();
    }
}

Var reshape(const Var& a, Shape shape) {
    if (numel(shape) != a.size())
        throw ValidationError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
    auto out = make_node(std::move(shape), std::vector<double>(a.value().begin(), a.value().end()), {a});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        o->backward = [o, pa] {
            auto& g = pa->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
        };
    }
    return Var(out);
}

Var gather(const Var& a, std::shared_ptr<const std::vector<std::int64_t>> index, Shape shape) {
    if (numel(shape) != index->size()) throw ValidationError("gather: index count does not match output shape");
    const auto av = a.value();
    std::vector<double> v(index->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto k = (*index)[i];
        if (k >= static_cast<std::int64_t>(av.size())) throw ValidationError("gather: index out of range");
        v[i] = k >= 0 ? av[static_cast<std::size_t>(k)] : 0.0;
    }
    auto out = make_node(std::move(shape), std::move(v), {a});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        o->backward = [o, pa, index] {
            auto& g = pa->ensure_grad();
            for (std::size_t i = 0; i < index->size(); ++i) {
                const auto k = (*index)[i];
                if (k >= 0) g[static_cast<std::size_t>(k)] += o->grad[i];
            }
        };
    }
    return Var(out);
}

namespace {

struct AxisSplit {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
    if (axis >= s.size()) throw ValidationError("axis " + std::to_string(axis) + " out of range for " + shape_string(s));
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.extent = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

}  // namespace

Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length) {
    const auto sp = split_axis(a.shape(), axis);
    if (start + length > sp.extent) throw ValidationError("slice: range exceeds axis");
    Shape shape = a.shape();
    shape[axis] = length;
    std::vector<double> v(sp.outer * length * sp.inner);
    const auto av = a.value();
    for (std::size_t o = 0; o < sp.outer; ++o)
        std::copy_n(av.begin() + static_cast<std::ptrdiff_t>((o * sp.extent + start) * sp.inner), length * sp.inner,
                    v.begin() + static_cast<std::ptrdiff_t>(o * length * sp.inner));
    auto out = make_node(std::move(shape), std::move(v), {a});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        o->backward = [o, pa, sp, start, length] {
            auto& g = pa->ensure_grad();
            const std::size_t chunk = length * sp.inner;
            for (std::size_t r = 0; r < sp.outer; ++r) {
                double* dst = g.data() + (r * sp.extent + start) * sp.inner;
                const double* src = o->grad.data() + r * chunk;
                for (std::size_t k = 0; k < chunk; ++k) dst[k] += src[k];
            }
        };
    }
    return Var(out);
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw ValidationError("concat: nothing to concatenate");
    Shape shape = parts.front().shape();
    if (axis >= shape.size()) throw ValidationError("concat: axis out of range");
    std::size_t total = 0;
    for (const auto& p : parts) {
        Shape s = p.shape();
        if (s.size() != shape.size()) throw ValidationError("concat: rank mismatch");
        total += s[axis];
        s[axis] = shape[axis];
        if (s != shape) throw ValidationError("concat: shapes differ off the concatenation axis");
    }
    const auto base = split_axis(shape, axis);
    shape[axis] = total;
    std::vector<double> v(base.outer * total * base.inner);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t ext = p.shape()[axis];
        const auto pv = p.value();
        for (std::size_t o = 0; o < base.outer; ++o)
            std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * ext * base.inner), ext * base.inner,
                        v.begin() + static_cast<std::ptrdiff_t>((o * total + offset) * base.inner));
        offset += ext;
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(v);
    if (g_grad_enabled)
        for (const auto& p : parts) n->requires_grad = n->requires_grad || p.requires_grad();
    if (n->requires_grad) {
        for (const auto& p : parts) n->parents.push_back(p.ptr());
        Node* o = n.get();
        n->backward = [o, base, total, axis] {
            std::size_t off = 0;
            for (const auto& sp : o->parents) {
                const std::size_t ext = sp->shape[axis];
                if (sp->requires_grad) {
                    auto& g = sp->ensure_grad();
                    for (std::size_t r = 0; r < base.outer; ++r)
                        for (std::size_t k = 0; k < ext * base.inner; ++k)
                            g[r * ext * base.inner + k] += o->grad[(r * total + off) * base.inner + k];
                }
                off += ext;
            }
        };
    }
    return Var(n);
}

Var mean_axis(const Var& a, std::size_t axis) {
    const auto sp = split_axis(a.shape(), axis);
    Shape shape = a.shape();
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    std::vector<double> v(sp.outer * sp.inner, 0.0);
    const auto av = a.value();
    const double inv = 1.0 / static_cast<double>(sp.extent);
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t e = 0; e < sp.extent; ++e)
            for (std::size_t i = 0; i < sp.inner; ++i) v[o * sp.inner + i] += av[(o * sp.extent + e) * sp.inner + i] * inv;
    auto out = make_node(std::move(shape), std::move(v), {a});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        o->backward = [o, pa, sp, inv] {
            auto& g = pa->ensure_grad();
            for (std::size_t r = 0; r < sp.outer; ++r)
                for (std::size_t e = 0; e < sp.extent; ++e)
                    for (std::size_t i = 0; i < sp.inner; ++i)
                        g[(r * sp.extent + e) * sp.inner + i] += o->grad[r * sp.inner + i] * inv;
        };
    }
    return Var(out);
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
    auto out = make_node(a.shape(), std::move(v), {a, b});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* pb = b.node();
        o->backward = [o, pa, pb] {
            for (Node* p : {pa, pb}) {
                if (!p->requires_grad) continue;
                auto& g = p->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
        };
    }
    return Var(out);
}

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
    auto out = make_node(a.shape(), std::move(v), {a, b});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* pb = b.node();
        o->backward = [o, pa, pb] {
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i] * pb->value[i];
            }
            if (pb->requires_grad) {
                auto& g = pb->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i] * pa->value[i];
            }
        };
    }
    return Var(out);
}

Var scale(const Var& a, double c) {
    return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_broadcast(const Var& a, const Var& b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (bs.size() > as.size() || !std::equal(bs.rbegin(), bs.rend(), as.rbegin()))
        throw ValidationError("add_broadcast: " + shape_string(bs) + " is not a suffix of " + shape_string(as));
    const std::size_t nb = b.size();
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i % nb];
    auto out = make_node(as, std::move(v), {a, b});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* pb = b.node();
        o->backward = [o, pa, pb, nb] {
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o->grad[i];
            }
            if (pb->requires_grad) {
                auto& g = pb->ensure_grad();
                for (std::size_t i = 0; i < o->grad.size(); ++i) g[i % nb] += o->grad[i];
            }
        };
    }
    return Var(out);
}

Var scale_rows(const Var& a, const Var& s) {
    if (s.shape().size() != 1 || a.shape().empty() || a.shape()[0] != s.shape()[0])
        throw ValidationError("scale_rows: " + shape_string(a.shape()) + " by " + shape_string(s.shape()));
    const std::size_t rows = s.size();
    const std::size_t per = a.size() / rows;
    std::vector<double> v(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < per; ++k) v[r * per + k] = a.value()[r * per + k] * s.value()[r];
    auto out = make_node(a.shape(), std::move(v), {a, s});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* ps = s.node();
        o->backward = [o, pa, ps, rows, per] {
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t k = 0; k < per; ++k) g[r * per + k] += o->grad[r * per + k] * ps->value[r];
            }
            if (ps->requires_grad) {
                auto& g = ps->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < per; ++k) acc += o->grad[r * per + k] * pa->value[r * per + k];
                    g[r] += acc;
                }
            }
        };
    }
    return Var(out);
}

Var matmul(const Var& a, const Var& w) {
    if (w.shape().size() != 2 || a.shape().empty() || a.shape().back() != w.shape()[0])
        throw ValidationError("matmul: " + shape_string(a.shape()) + " x " + shape_string(w.shape()));
    const std::size_t k = w.shape()[0], m = w.shape()[1];
    const std::size_t n = a.size() / k;
    Shape shape = a.shape();
    shape.back() = m;
    std::vector<double> v(n * m, 0.0);
    const double* A = a.value().data();
    const double* W = w.value().data();
    for (std::size_t i = 0; i < n; ++i) {
        double* y = v.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = A[i * k + p];
            if (s == 0.0) continue;
            const double* wr = W + p * m;
            for (std::size_t j = 0; j < m; ++j) y[j] += s * wr[j];
        }
    }
    auto out = make_node(std::move(shape), std::move(v), {a, w});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* pw = w.node();
        o->backward = [o, pa, pw, n, k, m] {
            const double* dy = o->grad.data();
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                const double* W = pw->value.data();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double* wr = W + p * m;
                        const double* dr = dy + i * m;
                        for (std::size_t j = 0; j < m; ++j) acc += dr[j] * wr[j];
                        g[i * k + p] += acc;
                    }
            }
            if (pw->requires_grad) {
                auto& g = pw->ensure_grad();
                const double* A = pa->value.data();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double s = A[i * k + p];
                        if (s == 0.0) continue;
                        double* gr = g.data() + p * m;
                        const double* dr = dy + i * m;
                        for (std::size_t j = 0; j < m; ++j) gr[j] += s * dr[j];
                    }
            }
        };
    }
    return Var(out);
}

Var bmm(const Var& a, const Var& b, bool transpose_b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] || as[2] != (transpose_b ? bs[2] : bs[1]))
        throw ValidationError("bmm: " + shape_string(as) + " x " + shape_string(bs) + (transpose_b ? "^T" : ""));
    const std::size_t G = as[0], n = as[1], k = as[2], m = transpose_b ? bs[1] : bs[2];
    std::vector<double> v(G * n * m, 0.0);
    const double* A = a.value().data();
    const double* B = b.value().data();
    for (std::size_t g = 0; g < G; ++g) {
        const double* Ag = A + g * n * k;
        const double* Bg = B + g * k * m;
        double* Y = v.data() + g * n * m;
        for (std::size_t i = 0; i < n; ++i) {
            if (transpose_b) {
                for (std::size_t j = 0; j < m; ++j) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < k; ++p) acc += Ag[i * k + p] * Bg[j * k + p];
                    Y[i * m + j] = acc;
                }
            } else {
                for (std::size_t p = 0; p < k; ++p) {
                    const double s = Ag[i * k + p];
                    for (std::size_t j = 0; j < m; ++j) Y[i * m + j] += s * Bg[p * m + j];
                }
            }
        }
    }
    auto out = make_node({G, n, m}, std::move(v), {a, b});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* pb = b.node();
        o->backward = [o, pa, pb, G, n, k, m, transpose_b] {
            const bool ga = pa->requires_grad, gb = pb->requires_grad;
            double* dA = ga ? pa->ensure_grad().data() : nullptr;
            double* dB = gb ? pb->ensure_grad().data() : nullptr;
            for (std::size_t g = 0; g < G; ++g) {
                const double* Ag = pa->value.data() + g * n * k;
                const double* Bg = pb->value.data() + g * k * m;
                const double* dY = o->grad.data() + g * n * m;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        const double d = dY[i * m + j];
                        if (d == 0.0) continue;
                        for (std::size_t p = 0; p < k; ++p) {
                            const std::size_t bi = transpose_b ? j * k + p : p * m + j;
                            if (ga) dA[g * n * k + i * k + p] += d * Bg[bi];
                            if (gb) dB[g * k * m + bi] += d * Ag[i * k + p];
                        }
                    }
            }
        };
    }
    return Var(out);
}

Var sigmoid(const Var& a) {
    return unary(
        a,
        [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
    return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var gelu(const Var& a) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double k = 0.044715;
    return unary(
        a, [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
        [](double x, double) {
            const double t = std::tanh(c * (x + k * x * x * x));
            return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * k * x * x);
        });
}

Var softmax_last(const Var& a) {
    const std::size_t d = a.shape().back();
    const std::size_t rows = a.size() / d;
    std::vector<double> v(a.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.value().data() + r * d;
        double* y = v.data() + r * d;
        const double mx = *std::max_element(x, x + d);
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) total += (y[j] = std::exp(x[j] - mx));
        for (std::size_t j = 0; j < d; ++j) y[j] /= total;
    }
    auto out = make_node(a.shape(), std::move(v), {a});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        o->backward = [o, pa, d, rows] {
            auto& g = pa->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* y = o->value.data() + r * d;
                const double* dy = o->grad.data() + r * d;
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += dy[j] * y[j];
                for (std::size_t j = 0; j < d; ++j) g[r * d + j] += y[j] * (dy[j] - dot);
            }
        };
    }
    return Var(out);
}

Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps) {
    const std::size_t d = a.shape().back();
    if (gamma.size() != d || beta.size() != d) throw ValidationError("layer_norm: parameter width mismatch");
    const std::size_t rows = a.size() / d;
    std::vector<double> v(a.size());
    auto xhat = std::make_shared<std::vector<double>>(a.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.value().data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (x[j] - mean) * is;
            (*xhat)[r * d + j] = h;
            v[r * d + j] = gamma.value()[j] * h + beta.value()[j];
        }
    }
    auto out = make_node(a.shape(), std::move(v), {a, gamma, beta});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pa = a.node();
        Node* pg = gamma.node();
        Node* pb = beta.node();
        o->backward = [o, pa, pg, pb, d, rows, xhat, inv_std] {
            const double* dy = o->grad.data();
            if (pg->requires_grad || pb->requires_grad) {
                auto& gg = pg->ensure_grad();
                auto& gb = pb->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < d; ++j) {
                        gg[j] += dy[r * d + j] * (*xhat)[r * d + j];
                        gb[j] += dy[r * d + j];
                    }
            }
            if (pa->requires_grad) {
                auto& g = pa->ensure_grad();
                const double dd = static_cast<double>(d);
                for (std::size_t r = 0; r < rows; ++r) {
                    double sum = 0.0, sum_x = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dx = dy[r * d + j] * pg->value[j];
                        sum += dx;
                        sum_x += dx * (*xhat)[r * d + j];
                    }
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dx = dy[r * d + j] * pg->value[j];
                        g[r * d + j] += (*inv_std)[r] / dd * (dd * dx - sum - (*xhat)[r * d + j] * sum_x);
                    }
                }
            }
        };
    }
    return Var(out);
}

Var conv2d(const Var& x, const Var& w, const Var& b) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[1] || b.size() != ws[0] || ws[2] % 2 == 0 || ws[3] % 2 == 0)
        throw ValidationError("conv2d: input " + shape_string(xs) + ", kernel " + shape_string(ws));
    const std::size_t B = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const std::size_t O = ws[0], KH = ws[2], KW = ws[3];
    const auto ph = static_cast<std::ptrdiff_t>(KH / 2), pw = static_cast<std::ptrdiff_t>(KW / 2);
    std::vector<double> v(B * O * H * W);
    const double* X = x.value().data();
    const double* K = w.value().data();
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t o = 0; o < O; ++o) {
            double* y = v.data() + (bi * O + o) * H * W;
            std::fill(y, y + H * W, b.value()[o]);
            for (std::size_t c = 0; c < C; ++c) {
                const double* xc = X + (bi * C + c) * H * W;
                for (std::size_t i = 0; i < KH; ++i)
                    for (std::size_t j = 0; j < KW; ++j) {
                        const double kv = K[((o * C + c) * KH + i) * KW + j];
                        for (std::size_t h = 0; h < H; ++h) {
                            const auto hh = static_cast<std::ptrdiff_t>(h) + static_cast<std::ptrdiff_t>(i) - ph;
                            if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t q = 0; q < W; ++q) {
                                const auto ww = static_cast<std::ptrdiff_t>(q) + static_cast<std::ptrdiff_t>(j) - pw;
                                if (ww < 0 || ww >= static_cast<std::ptrdiff_t>(W)) continue;
                                y[h * W + q] += kv * xc[static_cast<std::size_t>(hh) * W + static_cast<std::size_t>(ww)];
                            }
                        }
                    }
            }
        }
    auto out = make_node({B, O, H, W}, std::move(v), {x, w, b});
    if (out->requires_grad) {
        Node* o_ = out.get();
        Node* px = x.node();
        Node* pk = w.node();
        Node* pb = b.node();
        o_->backward = [o_, px, pk, pb, B, C, H, W, O, KH, KW, ph, pw] {
            const double* dY = o_->grad.data();
            double* dX = px->requires_grad ? px->ensure_grad().data() : nullptr;
            double* dK = pk->requires_grad ? pk->ensure_grad().data() : nullptr;
            double* dB = pb->requires_grad ? pb->ensure_grad().data() : nullptr;
            const double* X = px->value.data();
            const double* K = pk->value.data();
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t o = 0; o < O; ++o) {
                    const double* dy = dY + (bi * O + o) * H * W;
                    if (dB)
                        for (std::size_t t = 0; t < H * W; ++t) dB[o] += dy[t];
                    for (std::size_t c = 0; c < C; ++c) {
                        const double* xc = X + (bi * C + c) * H * W;
                        double* dxc = dX ? dX + (bi * C + c) * H * W : nullptr;
                        for (std::size_t i = 0; i < KH; ++i)
                            for (std::size_t j = 0; j < KW; ++j) {
                                const std::size_t kidx = ((o * C + c) * KH + i) * KW + j;
                                double acc = 0.0;
                                for (std::size_t h = 0; h < H; ++h) {
                                    const auto hh = static_cast<std::ptrdiff_t>(h) + static_cast<std::ptrdiff_t>(i) - ph;
                                    if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(H)) continue;
                                    for (std::size_t q = 0; q < W; ++q) {
                                        const auto ww =
                                            static_cast<std::ptrdiff_t>(q) + static_cast<std::ptrdiff_t>(j) - pw;
                                        if (ww < 0 || ww >= static_cast<std::ptrdiff_t>(W)) continue;
                                        const std::size_t src =
                                            static_cast<std::size_t>(hh) * W + static_cast<std::size_t>(ww);
                                        acc += dy[h * W + q] * xc[src];
                                        if (dxc) dxc[src] += dy[h * W + q] * K[kidx];
                                    }
                                }
                                if (dK) dK[kidx] += acc;
                            }
                    }
                }
        };
    }
    return Var(out);
}

Var dft_amplitude(const Var& x, const std::vector<std::size_t>& freqs) {
    const auto& s = x.shape();
    if (s.size() != 3) throw ValidationError("dft_amplitude: expected [B, L, D], got " + shape_string(s));
    const std::size_t B = s[0], L = s[1], D = s[2], K = freqs.size();
    // Per (b, k, d): real part, imaginary part, magnitude.
    auto parts = std::make_shared<std::vector<double>>(B * K * D * 3);
    std::vector<double> v(B * K, 0.0);
    const double* X = x.value().data();
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> cs(L), sn(L);
        for (std::size_t t = 0; t < L; ++t) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(freqs[k] * t % L) / static_cast<double>(L);
            cs[t] = std::cos(th);
            sn[t] = std::sin(th);
        }
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t d = 0; d < D; ++d) {
                double re = 0.0, im = 0.0;
                for (std::size_t t = 0; t < L; ++t) {
                    const double xv = X[(bi * L + t) * D + d];
                    re += xv * cs[t];
                    im -= xv * sn[t];
                }
                const double amp = std::sqrt(re * re + im * im);
                double* p = parts->data() + ((bi * K + k) * D + d) * 3;
                p[0] = re;
                p[1] = im;
                p[2] = amp;
                v[bi * K + k] += amp / static_cast<double>(D);
            }
    }
    auto out = make_node({B, K}, std::move(v), {x});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* px = x.node();
        o->backward = [o, px, parts, freqs, B, L, D, K] {
            auto& g = px->ensure_grad();
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t t = 0; t < L; ++t) {
                    const double th =
                        2.0 * std::numbers::pi * static_cast<double>(freqs[k] * t % L) / static_cast<double>(L);
                    const double c = std::cos(th), sn = std::sin(th);
                    for (std::size_t bi = 0; bi < B; ++bi) {
                        const double dout = o->grad[bi * K + k] / static_cast<double>(D);
                        for (std::size_t d = 0; d < D; ++d) {
                            const double* p = parts->data() + ((bi * K + k) * D + d) * 3;
                            if (p[2] <= 0.0) continue;
                            g[(bi * L + t) * D + d] += dout * (p[0] * c - p[1] * sn) / p[2];
                        }
                    }
                }
        };
    }
    return Var(out);
}

Var bce_with_logits(const Var& logits, std::span<const double> targets) {
    if (logits.size() != targets.size()) throw ValidationError("bce_with_logits: size mismatch");
    const std::size_t n = targets.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits.value()[i];
        total += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
    }
    auto out = make_node({1}, {total / static_cast<double>(n)}, {logits});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pl = logits.node();
        std::vector<double> y(targets.begin(), targets.end());
        o->backward = [o, pl, y = std::move(y), n] {
            auto& g = pl->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double z = pl->value[i];
                const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
                g[i] += o->grad[0] * (s - y[i]) / static_cast<double>(n);
            }
        };
    }
    return Var(out);
}

Var mse(const Var& pred, std::span<const double> targets) {
    if (pred.size() != targets.size()) throw ValidationError("mse: size mismatch");
    const std::size_t n = targets.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = pred.value()[i] - targets[i];
        total += e * e;
    }
    auto out = make_node({1}, {total / static_cast<double>(n)}, {pred});
    if (out->requires_grad) {
        Node* o = out.get();
        Node* pp = pred.node();
        std::vector<double> y(targets.begin(), targets.end());
        o->backward = [o, pp, y = std::move(y), n] {
            auto& g = pp->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                g[i] += o->grad[0] * 2.0 * (pp->value[i] - y[i]) / static_cast<double>(n);
        };
    }
    return Var(out);
}

}  // namespace sentiflow::nn
