#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "deepblur/generator.hpp"
#include "deepblur/image.hpp"
#include "deepblur/perception.hpp"

namespace deepblur {

enum class OptimizerKind { sgdm, adagrad, adam, lbfgs };

std::string optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_kind_from_name(const std::string& name);

// Only the fields relevant to `kind` are consulted.
struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::lbfgs;
    double learning_rate = 0.05;  // sgdm/adagrad/adam step size; lbfgs fallback step
    double momentum = 0.9;        // sgdm
    double beta1 = 0.9;           // adam
    double beta2 = 0.999;         // adam
    double epsilon = 1e-8;        // adagrad/adam
    int memory = 10;              // lbfgs history length
    int max_steps = 200;
    double target_loss = 1e-4;
    double armijo_c = 1e-4;   // lbfgs sufficient-decrease constant
    double backtrack = 0.5;   // lbfgs line-search shrink factor

    void validate() const;
};

using Vector = std::vector<double>;

struct SgdmState {
    Vector x;
    Vector velocity;  // zero-initialized to x's size on first step if empty
};

struct AdagradState {
    Vector x;
    Vector accum;
};

struct AdamState {
    Vector x;
    Vector m;
    Vector v;
};

struct LbfgsState {
    Vector x;
    Vector grad;  // gradient at x, current on entry
    double loss = 0.0;
    std::deque<std::pair<Vector, Vector>> pairs;  // (s, y), newest at the back
    bool first_step = true;
    bool last_step_fallback = false;
    int fallback_count = 0;
};

// v <- momentum * v + grad; x <- x - lr * v
void sgdm_step(SgdmState& st, const Vector& grad, const OptimizerConfig& cfg);

// G <- G + grad.^2; x <- x - lr * grad / (sqrt(G) + eps)
void adagrad_step(AdagradState& st, const Vector& grad, const OptimizerConfig& cfg);

// Bias-corrected Adam update; t is the 1-based step index.
void adam_step(AdamState& st, const Vector& grad, int t, const OptimizerConfig& cfg);

// Two-loop-recursion search direction with gamma = (s'y)/(y'y) scaling.
Vector lbfgs_direction(const LbfgsState& st, const OptimizerConfig& cfg);

// One quasi-Newton update: direction by two-loop recursion, step length by
// Armijo backtracking from 1.0 (first step from min(1, 1/|g|)). If 30
// backtracks fail, falls back to a plain gradient step of length lr and
// records the event. Curvature pairs are kept only when s'y > 1e-10.
// st.loss and st.grad must be current on entry and are current on exit.
void lbfgs_step(LbfgsState& st, const std::function<double(const Vector&)>& loss_fn,
                const std::function<Vector(const Vector&)>& grad_fn,
                const OptimizerConfig& cfg);

enum class InvertStatus { ok, aborted_non_finite };

struct InversionResult {
    LatentCode latent;  // best-so-far iterate, never the last one
    std::vector<double> losses;      // index 0 is the initial point
    double best_loss = std::numeric_limits<double>::infinity();
    int steps_taken = 0;
    std::vector<double> elapsed_ms;  // wall-clock duration per losses entry
    bool converged = false;
    InvertStatus status = InvertStatus::ok;
    int fallback_steps = 0;  // lbfgs line-search fallbacks
};

// Minimizes feature_loss(extract(target), extract(generate(w))) over w.
// Stops early once target_loss is reached; non-finite loss or gradient aborts
// with the trajectory so far and status aborted_non_finite.
InversionResult invert(const ImageTensor& target, const BlobGeneratorConfig& cfg,
                       const ExtractorSpec& spec, const OptimizerConfig& opt,
                       const LatentCode& init);

// CSV "step,loss,elapsed_ms", one row per losses entry including step 0.
// With wall_clock false the time column is written as 0 so re-runs are
// byte-identical.
std::string trajectory_csv(const InversionResult& r, bool wall_clock);

}  // namespace deepblur
