#include "reflectsim/forces.hpp"
#include "reflectsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace reflectsim
{

ForceField::ForceField(int n, int dim, std::optional<double> lipschitz, std::optional<double> sup_norm)
    : lipschitz_(lipschitz)
    , sup_norm_(sup_norm)
    , n_(n)
    , dim_(dim)
{
    if (n < 1) throw InputError("force field needs at least one particle");
    if (dim < 1) throw InputError("force field dimension must be >= 1");
}

ZeroForce::ZeroForce(int n, int dim)
    : ForceField(n, dim, 0.0, 0.0)
{
}

Configuration ZeroForce::evaluate(double, const Configuration& X) const { return Configuration::Zero(X.rows(), X.cols()); }

ConstantGravity::ConstantGravity(int n, Vec g)
    : ForceField(n, static_cast<int>(g.size()), 0.0, g.norm())
    , g_(std::move(g))
{
}

Configuration ConstantGravity::evaluate(double, const Configuration& X) const
{
    return g_.replicate(1, X.cols());
}

PairwiseSpring::PairwiseSpring(int n, int dim, double stiffness, double rest_length)
    : ForceField(n, dim, rest_length == 0.0 ? std::optional<double>(2.0 * stiffness * (n - 1)) : std::nullopt,
                 n == 1 ? std::optional<double>(0.0) : std::nullopt)
    , stiffness_(stiffness)
    , rest_(rest_length)
{
    if (stiffness < 0.0 || rest_length < 0.0) throw InputError("spring stiffness and rest length must be >= 0");
}

Configuration PairwiseSpring::evaluate(double, const Configuration& X) const
{
    Configuration F = Configuration::Zero(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        for (Eigen::Index j = i + 1; j < X.cols(); ++j)
        {
            const Vec y = X.col(i) - X.col(j);
            Vec f;
            if (rest_ == 0.0)
                f = -stiffness_ * y;
            else
            {
                const double r = y.norm();
                // Direction is undefined at coincidence; the stretch term alone
                // is continuous there only for rest = 0, so pick zero.
                f = r > 0.0 ? Vec(-stiffness_ * (r - rest_) * y / r) : Vec(Vec::Zero(y.size()));
            }
            F.col(i) += f;
            F.col(j) -= f;
        }
    return F;
}

PairwiseRepulsion::PairwiseRepulsion(int n, int dim, double strength, double cutoff)
    : ForceField(n, dim, 2.0 * strength * (n - 1),
                 // max_u u (1 - u^2)^2 at u = 1/sqrt(5)
                 strength * cutoff * (n - 1) * (16.0 / 25.0) / std::sqrt(5.0))
    , strength_(strength)
    , cutoff_(cutoff)
{
    if (strength < 0.0 || !(cutoff > 0.0)) throw InputError("repulsion needs strength >= 0 and cutoff > 0");
}

Configuration PairwiseRepulsion::evaluate(double, const Configuration& X) const
{
    Configuration F = Configuration::Zero(X.rows(), X.cols());
    const double c2 = cutoff_ * cutoff_;
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        for (Eigen::Index j = i + 1; j < X.cols(); ++j)
        {
            const Vec y = X.col(i) - X.col(j);
            const double q = y.squaredNorm() / c2;
            if (q >= 1.0) continue;
            const Vec f = strength_ * (1.0 - q) * (1.0 - q) * y;
            F.col(i) += f;
            F.col(j) -= f;
        }
    return F;
}

// ---------------------------------------------------------------------------

ScalarProfile ScalarProfile::constant(double c)
{
    return {"constant", [c](double) { return c; }, std::abs(c)};
}

ScalarProfile ScalarProfile::linear(double c0, double c1, double t_end)
{
    return {"linear", [c0, c1](double t) { return c0 + c1 * t; }, std::max(std::abs(c0), std::abs(c0 + c1 * t_end))};
}

ScalarProfile ScalarProfile::sine(double amplitude, double omega, double phase)
{
    return {"sine", [=](double t) { return amplitude * std::sin(omega * t + phase); }, std::abs(amplitude)};
}

ScalarProfile ScalarProfile::table(std::vector<std::pair<double, double>> nodes)
{
    if (nodes.empty()) throw InputError("profile table is empty");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i].first > nodes[i - 1].first)) throw InputError("profile table times must increase strictly");
    double bound = 0.0;
    for (const auto& [t, v] : nodes)
        bound = std::max(bound, std::abs(v));
    auto shared = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(nodes));
    auto f = [shared](double t) {
        const auto& n = *shared;
        if (t <= n.front().first) return n.front().second;
        if (t >= n.back().first) return n.back().second;
        const auto it = std::upper_bound(n.begin(), n.end(), t,
                                         [](double tt, const std::pair<double, double>& node) { return tt < node.first; });
        const auto& [t1, v1] = *it;
        const auto& [t0, v0] = *(it - 1);
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    };
    return {"table", std::move(f), bound};
}

ScalarProfile load_profile_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open profile table " + path);
    std::vector<std::pair<double, double>> nodes;
    std::string line;
    bool first = true;
    while (std::getline(in, line))
    {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double t = 0.0, v = 0.0;
        if (!(ls >> t >> v))
        {
            if (first)
            {
                first = false;
                continue;
            }
            throw InputError("malformed row in profile table " + path + ": " + line);
        }
        first = false;
        nodes.emplace_back(t, v);
    }
    return ScalarProfile::table(std::move(nodes));
}

TimeScalar::TimeScalar(int n, ScalarProfile profile, Vec direction)
    : ForceField(n, static_cast<int>(direction.size()), 0.0, std::nullopt)
    , profile_(std::move(profile))
    , direction_(std::move(direction))
{
    if (profile_.sup_bound) sup_norm_ = *profile_.sup_bound * direction_.norm();
}

Configuration TimeScalar::evaluate(double t, const Configuration& X) const
{
    return (profile_.f(t) * direction_).replicate(1, X.cols());
}

// ---------------------------------------------------------------------------

Configuration eval_force(const ForceField& ff, double t, const Configuration& X)
{
    if (!std::isfinite(t)) throw NumericError("non-finite time");
    if (!ff.horizon().contains(t))
        throw HorizonError("time " + std::to_string(t) + " outside force horizon [" +
                           std::to_string(ff.horizon().t_min) + ", " + std::to_string(ff.horizon().t_max) + "]");
    if (X.rows() != ff.dim() || X.cols() != ff.n_particles())
        throw InputError("configuration shape does not match force field");
    if (!X.allFinite()) throw NumericError("non-finite configuration");
    Configuration F = ff.evaluate(t, X);
    if (!F.allFinite()) throw NumericError("force field " + ff.kind() + " produced a non-finite value");
    return F;
}

double estimate_lipschitz(const ForceField& ff, std::size_t n_samples, std::uint64_t rng_seed,
                          std::optional<Box> sample_box, Execution exec)
{
    if (n_samples < 2) throw InputError("estimate_lipschitz needs at least two samples");
    const int m = ff.dim();
    const int n = ff.n_particles();
    const Box box = sample_box.value_or(Box{Vec::Constant(m, -1.0), Vec::Constant(m, 1.0)});
    const double t0 = ff.horizon().t_min;
    const double t1 = std::isfinite(ff.horizon().t_max) ? ff.horizon().t_max : t0 + 1.0;

    struct Pair
    {
        double t;
        Configuration X, Y;
    };
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Pair> pairs(n_samples);
    for (auto& p : pairs)
    {
        p.t = t0 + (t1 - t0) * unit(rng);
        p.X.resize(m, n);
        p.Y.resize(m, n);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < m; ++d)
            {
                p.X(d, i) = box.lo[d] + (box.hi[d] - box.lo[d]) * unit(rng);
                p.Y(d, i) = box.lo[d] + (box.hi[d] - box.lo[d]) * unit(rng);
            }
    }

    std::vector<double> quotient(n_samples, 0.0);
    const auto count = static_cast<std::ptrdiff_t>(n_samples);
    auto evaluate = [&](std::ptrdiff_t s) {
        const Pair& p = pairs[static_cast<std::size_t>(s)];
        const double dx = config_norm(p.X - p.Y);
        if (dx == 0.0) return;
        const Configuration dF = ff.evaluate(p.t, p.X) - ff.evaluate(p.t, p.Y);
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, dF.col(i).norm());
        quotient[static_cast<std::size_t>(s)] = worst / dx;
    };
    parallel_for(count, exec, evaluate, 256);
    return *std::max_element(quotient.begin(), quotient.end());
}

} // namespace reflectsim
