#pragma once

// Force fields F_i(t, X). Every built-in field is a closed form defined on all
// of (R^m)^n, so it doubles as the continuous extension beyond the domain that
// the penalty problem needs.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reflectsim/types.hpp"

namespace reflectsim
{

struct TimeWindow
{
    double t_min = 0.0;
    double t_max = kInf;
    [[nodiscard]] bool contains(double t) const { return t >= t_min && t <= t_max; }
};

class ForceField
{
  public:
    virtual ~ForceField() = default;

    [[nodiscard]] int n_particles() const { return n_; }
    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] virtual std::string kind() const = 0;

    [[nodiscard]] const TimeWindow& horizon() const { return horizon_; }
    void set_horizon(TimeWindow w) { horizon_ = w; }

    /// Declared Lipschitz constant in X w.r.t. the max-over-particles norm.
    [[nodiscard]] const std::optional<double>& lipschitz_constant() const { return lipschitz_; }
    [[nodiscard]] const std::optional<double>& sup_norm_bound() const { return sup_norm_; }

    /// Unchecked evaluation; columns of the result are per-particle forces.
    [[nodiscard]] virtual Configuration evaluate(double t, const Configuration& X) const = 0;

  protected:
    ForceField(int n, int dim, std::optional<double> lipschitz, std::optional<double> sup_norm);

    std::optional<double> lipschitz_;
    std::optional<double> sup_norm_;

  private:
    int n_;
    int dim_;
    TimeWindow horizon_{};
};

using ForceFieldPtr = std::shared_ptr<const ForceField>;

class ZeroForce final : public ForceField
{
  public:
    ZeroForce(int n, int dim);
    [[nodiscard]] std::string kind() const override { return "zero"; }
    [[nodiscard]] Configuration evaluate(double t, const Configuration& X) const override;
};

class ConstantGravity final : public ForceField
{
  public:
    ConstantGravity(int n, Vec g);
    [[nodiscard]] std::string kind() const override { return "gravity"; }
    [[nodiscard]] Configuration evaluate(double t, const Configuration& X) const override;

  private:
    Vec g_;
};

/// Linear spring between every pair: F_i = -k sum_j (|x_i - x_j| - rest) u_ij.
class PairwiseSpring final : public ForceField
{
  public:
    PairwiseSpring(int n, int dim, double stiffness, double rest_length);
    [[nodiscard]] std::string kind() const override { return "spring"; }
    [[nodiscard]] Configuration evaluate(double t, const Configuration& X) const override;

  private:
    double stiffness_;
    double rest_;
};

/// Soft repulsion s (1 - r^2/c^2)^2 (x_i - x_j) for r < c, zero beyond the cutoff.
class PairwiseRepulsion final : public ForceField
{
  public:
    PairwiseRepulsion(int n, int dim, double strength, double cutoff);
    [[nodiscard]] std::string kind() const override { return "repulsion"; }
    [[nodiscard]] Configuration evaluate(double t, const Configuration& X) const override;

  private:
    double strength_;
    double cutoff_;
};

/// Scalar function of time, with an optional bound on |f|.
struct ScalarProfile
{
    std::string name;
    std::function<double(double)> f;
    std::optional<double> sup_bound;

    static ScalarProfile constant(double c);
    /// c0 + c1 t; the bound is taken over [0, t_end].
    static ScalarProfile linear(double c0, double c1, double t_end);
    static ScalarProfile sine(double amplitude, double omega, double phase);
    /// Piecewise-linear through (t, value) nodes, held constant beyond the ends.
    static ScalarProfile table(std::vector<std::pair<double, double>> nodes);
};

/// Loads a two-column CSV (t,value), skipping a header line if present.
ScalarProfile load_profile_csv(const std::string& path);

/// F_i(t, X) = f(t) * direction for every particle.
class TimeScalar final : public ForceField
{
  public:
    TimeScalar(int n, ScalarProfile profile, Vec direction);
    [[nodiscard]] std::string kind() const override { return "time_scalar"; }
    [[nodiscard]] Configuration evaluate(double t, const Configuration& X) const override;
    [[nodiscard]] const ScalarProfile& profile() const { return profile_; }

  private:
    ScalarProfile profile_;
    Vec direction_;
};

/// Checked evaluation. Throws on a bad shape or a non-finite result, and past the horizon.
[[nodiscard]] Configuration eval_force(const ForceField& ff, double t, const Configuration& X);

/// Largest sampled difference quotient |F_i(t,X) - F_i(t,Y)| / ||X - Y||, a
/// lower bound on the true Lipschitz constant. Samples are drawn per particle
/// from `sample_box` (default [-1,1]^m) and t from the horizon (or [0,1]).
[[nodiscard]] double estimate_lipschitz(const ForceField& ff, std::size_t n_samples, std::uint64_t rng_seed,
                                        std::optional<Box> sample_box = {}, Execution exec = Execution::parallel);

} // namespace reflectsim
