#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reflectsim
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Configuration of n particles in R^m; column i holds particle i.
using Configuration = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Execution
{
    serial,
    parallel
};

// Error hierarchy. Every failure a caller can act on has its own type.
struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct DomainQueryError : Error
{
    using Error::Error;
};
struct TubeViolation : Error
{
    using Error::Error;
};
struct GeometryError : Error
{
    using Error::Error;
};
struct HorizonError : Error
{
    using Error::Error;
};
struct NumericError : Error
{
    using Error::Error;
};
struct BracketError : Error
{
    using Error::Error;
};
struct ModeError : Error
{
    using Error::Error;
};
struct InputError : Error
{
    using Error::Error;
};
struct StiffnessError : Error
{
    using Error::Error;
};
struct ConstructionError : Error
{
    using Error::Error;
};

/// Penalty run left the tubular neighbourhood; carries the penetration reached.
struct InvalidRunError : Error
{
    InvalidRunError(const std::string& what, double penetration)
        : Error(what)
        , achieved_penetration(penetration)
    {
    }
    double achieved_penetration;
};

struct Box
{
    Vec lo;
    Vec hi;

    [[nodiscard]] bool contains(const Vec& x, double slack = 0.0) const
    {
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
        }
        return true;
    }
    [[nodiscard]] double diagonal() const { return (hi - lo).norm(); }
};

/// Max over particles of the Euclidean norm of each column.
inline double config_norm(const Configuration& X)
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        m = std::max(m, X.col(i).norm());
    return m;
}

} // namespace reflectsim
