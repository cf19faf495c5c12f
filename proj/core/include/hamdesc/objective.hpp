#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hamdesc/kinetic.hpp"
#include "hamdesc/types.hpp"

namespace hamdesc {

/// Which kinetic family the certificate's gradient-side inequality pairs with.
enum class Pairing { KnownPower, Relativistic };

/// Growth constants for f around x*. Distances are measured in the primal
/// norm l_{q'} dual to `norm`, gradients in the dual norm l_q.
struct GrowthCertificate {
    double b = 2.0;
    double B = 2.0;
    double mu = 1.0;
    double L = 1.0;
    NormDescriptor norm{};
    Pairing pairing = Pairing::KnownPower;
    std::optional<double> L_f;
    std::optional<double> D_f;
    std::optional<double> N;
    std::optional<double> sigma_power;
    std::optional<double> D_f_smooth;
};

struct ObjectiveSpec {
    std::string name;
    int dim = 1;
    std::function<double(const Vector&)> eval;
    std::function<Vector(const Vector&)> grad;
    std::function<Vector(const Vector&, const Vector&)> hvp;  // empty when unavailable
    std::optional<Vector> x_star;
    std::optional<double> f_star;
    std::optional<GrowthCertificate> certificate;
    bool convex = true;
};

/// Parameters for builtin objectives: named scalars plus an optional matrix.
struct ObjectiveParams {
    std::map<std::string, double> scalars;
    std::optional<Matrix> matrix;

    double get(const std::string& key, double fallback) const;
};

struct CertificateReport {
    double max_lower_violation = 0.0;
    double max_upper_violation = 0.0;
    int samples = 0;
    bool pass = false;
};

double suboptimality(const ObjectiveSpec& f, const Vector& x);

/// Names: quartic2d, power1d, phiPower, normFour, quadratic, nonconvex1d.
ObjectiveSpec builtin(const std::string& name, const ObjectiveParams& params = {});
std::vector<std::string> builtin_names();

/// Samples random directions at the given radii around x* and checks
/// mu*phi_b^B(||x - x*||) <= f - f* and phi_kin(||grad f||_*) <= L (f - f*).
CertificateReport certify_growth(const ObjectiveSpec& f, int sample_count,
                                 const std::vector<double>& radius_grid,
                                 std::uint64_t seed = 20240607);

/// Same check against an explicit certificate (for probing wrong constants).
CertificateReport certify_growth(const ObjectiveSpec& f, const GrowthCertificate& cert,
                                 int sample_count, const std::vector<double>& radius_grid,
                                 std::uint64_t seed = 20240607);

/// Dense Hessian assembled from the Hessian-vector product.
Matrix dense_hessian(const ObjectiveSpec& f, const Vector& x);

/// Largest Hessian eigenvalue at x (the smoothness surrogate L0).
double local_smoothness(const ObjectiveSpec& f, const Vector& x);

/// Kinetic energy whose exponents match a certificate (a = b/(b-1), A = B/(B-1)).
PowerKinetic matched_kinetic(const GrowthCertificate& cert);

}  // namespace hamdesc
