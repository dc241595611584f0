#include "deepblur/inversion.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "deepblur/numfmt.hpp"

namespace deepblur {

std::string optimizer_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::sgdm: return "sgdm";
        case OptimizerKind::adagrad: return "adagrad";
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::lbfgs: return "lbfgs";
    }
    return "?";
}

OptimizerKind optimizer_kind_from_name(const std::string& name) {
    if (name == "sgdm") return OptimizerKind::sgdm;
    if (name == "adagrad") return OptimizerKind::adagrad;
    if (name == "adam") return OptimizerKind::adam;
    if (name == "lbfgs") return OptimizerKind::lbfgs;
    throw std::invalid_argument("unknown optimizer kind: " + name);
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("optimizer: momentum must be in [0, 1)");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("optimizer: betas must be in [0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be > 0");
    if (memory < 1) throw std::invalid_argument("optimizer: memory must be >= 1");
    if (max_steps < 0) throw std::invalid_argument("optimizer: max_steps must be >= 0");
    if (target_loss < 0.0) throw std::invalid_argument("optimizer: target_loss must be >= 0");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
        throw std::invalid_argument("optimizer: armijo_c must be in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0))
        throw std::invalid_argument("optimizer: backtrack must be in (0, 1)");
}

namespace {

bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double dot(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

void check_grad(const Vector& grad, std::size_t n) {
    if (grad.size() != n) throw std::invalid_argument("optimizer step: gradient size mismatch");
    if (!all_finite(grad)) throw std::invalid_argument("optimizer step: non-finite gradient");
}

}  // namespace

void sgdm_step(SgdmState& st, const Vector& grad, const OptimizerConfig& cfg) {
    check_grad(grad, st.x.size());
    if (st.velocity.empty()) st.velocity.assign(st.x.size(), 0.0);
    for (std::size_t i = 0; i < st.x.size(); ++i) {
        st.velocity[i] = cfg.momentum * st.velocity[i] + grad[i];
        st.x[i] -= cfg.learning_rate * st.velocity[i];
    }
}

void adagrad_step(AdagradState& st, const Vector& grad, const OptimizerConfig& cfg) {
    check_grad(grad, st.x.size());
    if (st.accum.empty()) st.accum.assign(st.x.size(), 0.0);
    for (std::size_t i = 0; i < st.x.size(); ++i) {
        st.accum[i] += grad[i] * grad[i];
        st.x[i] -= cfg.learning_rate * grad[i] / (std::sqrt(st.accum[i]) + cfg.epsilon);
    }
}

void adam_step(AdamState& st, const Vector& grad, int t, const OptimizerConfig& cfg) {
    check_grad(grad, st.x.size());
    if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
    if (st.m.empty()) st.m.assign(st.x.size(), 0.0);
    if (st.v.empty()) st.v.assign(st.x.size(), 0.0);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < st.x.size(); ++i) {
        st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
        st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        st.x[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

Vector lbfgs_direction(const LbfgsState& st, const OptimizerConfig& cfg) {
    (void)cfg;
    const std::size_t n = st.x.size();
    Vector q = st.grad;
    if (st.pairs.empty()) {
        for (double& x : q) x = -x;
        return q;
    }

    const std::size_t k = st.pairs.size();
    std::vector<double> alpha(k), rho(k);
    for (std::size_t j = k; j-- > 0;) {
        const auto& [s, y] = st.pairs[j];
        rho[j] = 1.0 / dot(s, y);
        alpha[j] = rho[j] * dot(s, q);
        for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[j] * y[i];
    }
    const auto& [s_last, y_last] = st.pairs.back();
    const double gamma = dot(s_last, y_last) / dot(y_last, y_last);
    for (double& x : q) x *= gamma;
    for (std::size_t j = 0; j < k; ++j) {
        const auto& [s, y] = st.pairs[j];
        const double beta = rho[j] * dot(y, q);
        for (std::size_t i = 0; i < n; ++i) q[i] += s[i] * (alpha[j] - beta);
    }
    for (double& x : q) x = -x;
    return q;
}

void lbfgs_step(LbfgsState& st, const std::function<double(const Vector&)>& loss_fn,
                const std::function<Vector(const Vector&)>& grad_fn,
                const OptimizerConfig& cfg) {
    const std::size_t n = st.x.size();
    if (st.grad.size() != n) throw std::invalid_argument("lbfgs_step: stale gradient");

    Vector d = lbfgs_direction(st, cfg);
    double gtd = dot(st.grad, d);
    if (!(gtd < 0.0)) {  // not a descent direction; reset to steepest descent
        d = st.grad;
        for (double& x : d) x = -x;
        gtd = -dot(st.grad, st.grad);
    }
    if (gtd == 0.0) {  // stationary point, nothing to move
        st.last_step_fallback = false;
        st.first_step = false;
        return;
    }

    const double gnorm = norm2(st.grad);
    double alpha = st.first_step ? std::min(1.0, 1.0 / gnorm) : 1.0;

    Vector x_new(n);
    double f_new = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = st.x[i] + alpha * d[i];
        f_new = loss_fn(x_new);
        if (f_new <= st.loss + cfg.armijo_c * alpha * gtd) {
            accepted = true;
            break;
        }
        alpha *= cfg.backtrack;
    }
    if (!accepted) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = st.x[i] - cfg.learning_rate * st.grad[i];
        f_new = loss_fn(x_new);
        st.last_step_fallback = true;
        ++st.fallback_count;
    } else {
        st.last_step_fallback = false;
    }

    Vector g_new = grad_fn(x_new);
    if (g_new.size() != n) throw std::invalid_argument("lbfgs_step: gradient size mismatch");

    Vector s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = x_new[i] - st.x[i];
        y[i] = g_new[i] - st.grad[i];
    }
    if (all_finite(y) && dot(s, y) > 1e-10) {
        st.pairs.emplace_back(std::move(s), std::move(y));
        while (static_cast<int>(st.pairs.size()) > cfg.memory) st.pairs.pop_front();
    }

    st.x = std::move(x_new);
    st.loss = f_new;
    st.grad = std::move(g_new);
    st.first_step = false;
}

namespace {

LatentCode unflatten(const Vector& x, int rows, int cols) {
    LatentCode w(rows, cols);
    w.v = x;
    return w;
}

}  // namespace

InversionResult invert(const ImageTensor& target, const BlobGeneratorConfig& cfg,
                       const ExtractorSpec& spec, const OptimizerConfig& opt,
                       const LatentCode& init) {
    cfg.validate();
    opt.validate();
    if (init.rows != cfg.blobs || init.cols != kLatentCols)
        throw std::invalid_argument("invert: init latent shape mismatch");
    if (!all_finite(init.v)) throw std::invalid_argument("invert: init latent must be finite");
    if (target.height != cfg.size || target.width != cfg.size || target.channels != 3)
        throw std::invalid_argument("invert: target shape does not match generator output");

    const FeatureVector y_target = extract(target, spec);
    const int rows = cfg.blobs, cols = kLatentCols;

    // Non-finite pixels short-circuit to NaN so the abort path sees them as a
    // loss value rather than an exception out of extract().
    auto loss_of = [&](const Vector& x) -> double {
        const ImageTensor img = synth_generate(unflatten(x, rows, cols), cfg);
        if (!all_finite(img.data)) return std::numeric_limits<double>::quiet_NaN();
        return feature_loss(y_target, extract(img, spec));
    };
    auto grad_of = [&](const Vector& x) -> Vector {
        const LatentCode w = unflatten(x, rows, cols);
        const ImageTensor img = synth_generate(w, cfg);
        if (!all_finite(img.data))
            return Vector(x.size(), std::numeric_limits<double>::quiet_NaN());
        const FeatureVector yhat = extract(img, spec);
        const ImageTensor up = feature_loss_gradient(y_target, yhat, spec, img);
        return synth_gradient(w, cfg, up).v;
    };

    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    InversionResult res;
    res.latent = init;

    Vector best_x = init.v;

    auto record = [&](double f, double ms) {
        res.losses.push_back(f);
        res.elapsed_ms.push_back(ms);
        if (f < res.best_loss) {
            res.best_loss = f;
        }
    };

    const auto t0 = clock::now();

    if (opt.kind == OptimizerKind::lbfgs) {
        LbfgsState st;
        st.x = init.v;
        st.loss = loss_of(st.x);
        if (!std::isfinite(st.loss)) {
            res.status = InvertStatus::aborted_non_finite;
            return res;
        }
        st.grad = grad_of(st.x);
        record(st.loss, ms_since(t0));
        best_x = st.x;
        if (!all_finite(st.grad)) {
            res.status = InvertStatus::aborted_non_finite;
            res.converged = res.best_loss <= opt.target_loss;
            return res;
        }
        for (int step = 1; step <= opt.max_steps; ++step) {
            if (res.best_loss <= opt.target_loss) break;
            const auto ts = clock::now();
            lbfgs_step(st, loss_of, grad_of, opt);
            const double dt = ms_since(ts);
            if (!std::isfinite(st.loss)) {
                res.status = InvertStatus::aborted_non_finite;
                break;
            }
            const bool improved = st.loss < res.best_loss;
            record(st.loss, dt);
            ++res.steps_taken;
            if (improved) best_x = st.x;
            if (!all_finite(st.grad)) {
                res.status = InvertStatus::aborted_non_finite;
                break;
            }
        }
        res.fallback_steps = st.fallback_count;
    } else {
        Vector x = init.v;
        double f = loss_of(x);
        if (!std::isfinite(f)) {
            res.status = InvertStatus::aborted_non_finite;
            return res;
        }
        record(f, ms_since(t0));
        best_x = x;

        SgdmState sg;
        AdagradState ag;
        AdamState ad;
        if (opt.kind == OptimizerKind::sgdm) sg.x = x;
        if (opt.kind == OptimizerKind::adagrad) ag.x = x;
        if (opt.kind == OptimizerKind::adam) ad.x = x;

        for (int step = 1; step <= opt.max_steps; ++step) {
            if (res.best_loss <= opt.target_loss) break;
            const auto ts = clock::now();
            const Vector g = grad_of(x);
            if (!all_finite(g)) {
                res.status = InvertStatus::aborted_non_finite;
                break;
            }
            switch (opt.kind) {
                case OptimizerKind::sgdm:
                    sgdm_step(sg, g, opt);
                    x = sg.x;
                    break;
                case OptimizerKind::adagrad:
                    adagrad_step(ag, g, opt);
                    x = ag.x;
                    break;
                case OptimizerKind::adam:
                    adam_step(ad, g, step, opt);
                    x = ad.x;
                    break;
                case OptimizerKind::lbfgs:
                    break;  // handled above
            }
            f = loss_of(x);
            const double dt = ms_since(ts);
            if (!std::isfinite(f)) {
                res.status = InvertStatus::aborted_non_finite;
                break;
            }
            const bool improved = f < res.best_loss;
            record(f, dt);
            ++res.steps_taken;
            if (improved) best_x = x;
        }
    }

    res.converged = res.best_loss <= opt.target_loss;
    res.latent = unflatten(best_x, rows, cols);
    return res;
}

std::string trajectory_csv(const InversionResult& r, bool wall_clock) {
    std::string out = "step,loss,elapsed_ms\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(r.losses[i]);
        out += ',';
        out += wall_clock ? format_double(r.elapsed_ms[i]) : std::string("0");
        out += '\n';
    }
    return out;
}

}  // namespace deepblur
