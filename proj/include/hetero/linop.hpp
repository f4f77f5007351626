#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "connect.hpp"
#include "dynamics.hpp"
#include "inner.hpp"
#include "params.hpp"

namespace hetero {

using SpMat = Eigen::SparseMatrix<double>;

struct GridTooCoarse : DomainError {
    using DomainError::DomainError;
};

struct SolvabilityViolation : DomainError {
    double defect;
    SolvabilityViolation(const std::string& m, double d) : DomainError(m), defect(d) {}
};

// Uniform grid with the profile state at every node.
struct ProfileGrid {
    std::vector<double> x;
    std::vector<State> s;
    double h = 0;
    std::size_t size() const { return x.size(); }
};

struct GridSpec {
    double h = 0.05;
    double x_min = std::numeric_limits<double>::quiet_NaN();  // NaN: use the profile span
    double x_max = std::numeric_limits<double>::quiet_NaN();
    double rel_tol = 1e-13;  // integrator tolerance when resampling
};

inline ProfileGrid resample(const HeteroclinicProfile& prof, const GridSpec& spec) {
    const double a = std::isnan(spec.x_min) ? prof.node_x.front() : spec.x_min;
    const double b = std::isnan(spec.x_max) ? prof.node_x.back() : spec.x_max;
    if (!(b > a) || !(spec.h > 0)) throw DomainError("resample: empty grid");
    // nodes at integer multiples of h, so x = 0 is a node whenever the span straddles it
    const long k0 = long(std::ceil(a / spec.h - 1e-9)), k1 = long(std::floor(b / spec.h + 1e-9));
    if (k1 - k0 < 4) throw DomainError("resample: fewer than 5 nodes");
    ProfileGrid g;
    g.h = spec.h;
    for (long k = k0; k <= k1; ++k) g.x.push_back(std::max(a, std::min(b, k * spec.h)));
    IntegratorConfig ic;
    ic.rel_tol = spec.rel_tol;
    ic.abs_tol = spec.rel_tol * 1e-2;
    g.s = sample_on_grid(prof.node_x, prof.node_s, g.x, prof.p, ic);
    return g;
}

inline ProfileGrid constant_grid(const State& s, double x0, double x1, int n) {
    ProfileGrid g;
    g.h = (x1 - x0) / n;
    for (int i = 0; i <= n; ++i) {
        g.x.push_back(x0 + g.h * i);
        g.s.push_back(s);
    }
    return g;
}

struct GridOperator {
    std::vector<double> x;
    double h = 0;
    SpMat M;
    int blocks = 1;  // 2 for (A, C), 1 for D
    std::string boundary = "zero ghost nodes; far-field coefficients follow the profile tails";
    std::size_t n() const { return x.size(); }
};

// Largest admissible spacing: 8 points per shortest linear wavelength at the equilibria.
inline double max_grid_step(const Params& p) {
    const double km = std::pow(2.0, -0.25), kp = std::sqrt(p.delta / 2.0);
    return 2.0 * M_PI / std::max(km, kp) / 8.0;
}

namespace detail {

inline void check_grid(const ProfileGrid& g, const Params& p) {
    if (g.size() < 5) throw GridTooCoarse("operator grid needs at least 5 points");
    if (g.h > max_grid_step(p))
        throw GridTooCoarse("grid step " + std::to_string(g.h) + " exceeds " +
                            std::to_string(max_grid_step(p)));
}

inline void add_d2(std::vector<Eigen::Triplet<double>>& t, int off, int n, double h, double scale) {
    const double c = scale / (h * h);
    for (int i = 0; i < n; ++i) {
        t.emplace_back(off + i, off + i, -2 * c);
        if (i > 0) t.emplace_back(off + i, off + i - 1, c);
        if (i + 1 < n) t.emplace_back(off + i, off + i + 1, c);
    }
}

inline void add_d4(std::vector<Eigen::Triplet<double>>& t, int off, int n, double h, double scale) {
    const double c = scale / (h * h * h * h);
    const double w[5] = {1, -4, 6, -4, 1};
    for (int i = 0; i < n; ++i)
        for (int k = -2; k <= 2; ++k)
            if (i + k >= 0 && i + k < n) t.emplace_back(off + i, off + i + k, c * w[k + 2]);
}

}  // namespace detail

// Unknown ordering (A_0..A_{n-1}, C_0..C_{n-1}).
inline GridOperator assemble_Mg(const ProfileGrid& g, const Params& p) {
    detail::check_grid(g, p);
    const int n = int(g.size());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(std::size_t(n) * 10);
    detail::add_d4(t, 0, n, g.h, -1.0);
    detail::add_d2(t, n, n, g.h, 1.0 / (p.epsilon * p.epsilon));
    for (int i = 0; i < n; ++i) {
        const double A = g.s[i][iA0], B = g.s[i][iB0];
        t.emplace_back(i, i, 1 - 3 * A * A - p.g * B * B);
        t.emplace_back(n + i, n + i, 1 - p.g * A * A - 3 * B * B);
        t.emplace_back(i, n + i, -2 * p.g * A * B);
        t.emplace_back(n + i, i, -2 * p.g * A * B);
    }
    GridOperator op;
    op.x = g.x;
    op.h = g.h;
    op.blocks = 2;
    op.M.resize(2 * n, 2 * n);
    op.M.setFromTriplets(t.begin(), t.end());
    return op;
}

inline GridOperator assemble_Lg(const ProfileGrid& g, const Params& p) {
    detail::check_grid(g, p);
    const int n = int(g.size());
    std::vector<Eigen::Triplet<double>> t;
    detail::add_d2(t, 0, n, g.h, 1.0 / (p.epsilon * p.epsilon));
    for (int i = 0; i < n; ++i) {
        const double A = g.s[i][iA0], B = g.s[i][iB0];
        t.emplace_back(i, i, 1 - p.g * A * A - B * B);
    }
    GridOperator op;
    op.x = g.x;
    op.h = g.h;
    op.M.resize(n, n);
    op.M.setFromTriplets(t.begin(), t.end());
    return op;
}

// e^{eta|x|} L e^{-eta|x|}: the operator seen in the weighted space.
inline SpMat conjugate_weight(const GridOperator& op, double eta) {
    const int n = int(op.n());
    const int N = int(op.M.rows());
    Eigen::VectorXd w(N);
    for (int b = 0; b < N / n; ++b)
        for (int i = 0; i < n; ++i) w(b * n + i) = std::exp(eta * std::abs(op.x[i]));
    SpMat W = SpMat(w.asDiagonal());
    SpMat Wi = SpMat(w.cwiseInverse().asDiagonal());
    return W * op.M * Wi;
}

struct SingularTriplets {
    std::vector<double> sigma;  // ascending
    Eigen::MatrixXd V;          // right singular vectors (columns)
    int iterations = 0;
};

struct EigenNonConvergence : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

// Smallest singular values by block inverse iteration with Rayleigh-Ritz.
// Symmetric matrices iterate on (M - tau)^{-1} directly; squaring a nearly singular M would
// bury every direction but the kernel under roundoff. Others iterate on (M^T M)^{-1}.
inline SingularTriplets smallest_singular(const SpMat& M, int k = 3, bool symmetric = false,
                                          int block = 8, int max_iter = 300, double tol = 1e-12) {
    const int N = int(M.rows());
    block = std::min(std::max(block, k), N);
    double mnorm = 0;
    for (int c = 0; c < M.outerSize(); ++c)
        for (SpMat::InnerIterator it(M, c); it; ++it) mnorm = std::max(mnorm, std::abs(it.value()));
    const double floor = 100 * std::numeric_limits<double>::epsilon() * mnorm;  // absolute accuracy limit
    Eigen::SparseLU<SpMat> lu, lut;
    if (symmetric) {
        SpMat I(N, N);
        I.setIdentity();
        lu.compute(M - 1e-9 * mnorm * I);
    } else {
        lu.compute(M);
        lut.compute(SpMat(M.transpose()));
    }
    if (lu.info() != Eigen::Success || (!symmetric && lut.info() != Eigen::Success))
        throw NumericalFailure("smallest_singular: factorization failed (exactly singular matrix)");
    std::mt19937 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd V(N, block);
    for (int j = 0; j < block; ++j)
        for (int i = 0; i < N; ++i) V(i, j) = nd(rng);
    Eigen::VectorXd prev = Eigen::VectorXd::Constant(k, -1.0);
    SingularTriplets out;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::MatrixXd Y(N, block);
        for (int j = 0; j < block; ++j)
            Y.col(j) = symmetric ? Eigen::VectorXd(lu.solve(V.col(j)))
                                 : Eigen::VectorXd(lu.solve(Eigen::VectorXd(lut.solve(V.col(j)))));
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
        V = qr.householderQ() * Eigen::MatrixXd::Identity(N, block);
        Eigen::MatrixXd S = M * V;
        if (symmetric) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V.transpose() * S);
            std::vector<int> idx(block);
            for (int j = 0; j < block; ++j) idx[j] = j;
            const auto& ev = es.eigenvalues();
            std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(ev(a)) < std::abs(ev(b)); });
            Eigen::MatrixXd Q(block, block);
            for (int j = 0; j < block; ++j) Q.col(j) = es.eigenvectors().col(idx[j]);
            V = V * Q;
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S.transpose() * S);
            V = V * es.eigenvectors();
        }
        S = M * V.leftCols(k);
        Eigen::VectorXd cur(k);
        for (int j = 0; j < k; ++j) cur(j) = S.col(j).norm();
        double change = 0;
        for (int j = 0; j < k; ++j)
            change = std::max(change, std::abs(cur(j) - prev(j)) / (std::abs(cur(j)) + floor / tol));
        prev = cur;
        out.iterations = it;
        if (change < tol || it == max_iter) {
            if (change >= 1e-6)
                throw EigenNonConvergence("smallest_singular: inverse iteration did not converge");
            out.sigma.assign(cur.data(), cur.data() + k);
            out.V = V.leftCols(k);
            return out;
        }
    }
    throw EigenNonConvergence("smallest_singular: unreachable");
}

inline double trapezoid(const std::vector<double>& f, double h) {
    if (f.size() < 2) return 0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

// |int A B (B u + A v) dx| for (u, v) normalized to unit L2 norm.
inline double orthogonality_defect(const ProfileGrid& g, const std::vector<double>& u,
                                   const std::vector<double>& v) {
    const std::size_t n = g.size();
    std::vector<double> nn(n), f(n);
    for (std::size_t i = 0; i < n; ++i) nn[i] = u[i] * u[i] + v[i] * v[i];
    const double nrm = std::sqrt(trapezoid(nn, g.h));
    for (std::size_t i = 0; i < n; ++i) {
        const double A = g.s[i][iA0], B = g.s[i][iB0];
        f[i] = A * B * (B * u[i] + A * v[i]) / nrm;
    }
    return std::abs(trapezoid(f, g.h));
}

// sup over interior rows of |M_g (A', B')| / sup |(A', B')|.
inline double kernel_residual(const GridOperator& op, const ProfileGrid& g) {
    const int n = int(g.size());
    Eigen::VectorXd t(2 * n);
    for (int i = 0; i < n; ++i) {
        t(i) = g.s[i][iA1];
        t(n + i) = g.s[i][iB1];
    }
    const Eigen::VectorXd r = op.M * t;
    double m = 0;
    for (int i = 2; i < n - 2; ++i) m = std::max({m, std::abs(r(i)), std::abs(r(n + i))});
    return m / t.lpNorm<Eigen::Infinity>();
}

inline double kernel_residual_Lg(const GridOperator& op, const ProfileGrid& g) {
    const int n = int(g.size());
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = g.s[i][iB0];
    const Eigen::VectorXd r = op.M * b;
    double m = 0;
    for (int i = 1; i < n - 1; ++i) m = std::max(m, std::abs(r(i)));
    return m / b.lpNorm<Eigen::Infinity>();
}

struct KernelReport {
    std::array<double, 3> sigma{};
    double separation = 0;  // sigma_2 / sigma_1
    double kernel_angle = 0;
    double orthogonality_defect = 0;           // on the singular vector
    double orthogonality_defect_profile = 0;   // on (A', B') itself
    double kernel_residual = 0;
    int iterations = 0;
    std::vector<double> u, v;  // kernel candidate, aligned with (A', B')
};

inline KernelReport kernel_diagnostics(const GridOperator& op, const ProfileGrid& g) {
    if (op.blocks != 2 || op.n() != g.size()) throw DomainError("kernel_diagnostics expects M_g on the same grid");
    const int n = int(g.size());
    const auto st = smallest_singular(op.M, 3, true);
    KernelReport r;
    for (int k = 0; k < 3; ++k) r.sigma[k] = st.sigma[k];
    r.separation = r.sigma[0] > 0 ? r.sigma[1] / r.sigma[0] : std::numeric_limits<double>::infinity();
    r.iterations = st.iterations;
    Eigen::VectorXd c = st.V.col(0), t(2 * n);
    for (int i = 0; i < n; ++i) {
        t(i) = g.s[i][iA1];
        t(n + i) = g.s[i][iB1];
    }
    if (c.dot(t) < 0) c = -c;
    const double proj = c.dot(t) / t.norm();
    const double perp = (c - proj * t / t.norm()).norm();
    r.kernel_angle = std::atan2(perp, proj);
    r.u.assign(c.data(), c.data() + n);
    r.v.assign(c.data() + n, c.data() + 2 * n);
    r.orthogonality_defect = orthogonality_defect(g, r.u, r.v);
    std::vector<double> a1(n), b1(n);
    for (int i = 0; i < n; ++i) {
        a1[i] = g.s[i][iA1];
        b1[i] = g.s[i][iB1];
    }
    r.orthogonality_defect_profile = orthogonality_defect(g, a1, b1);
    r.kernel_residual = kernel_residual(op, g);
    return r;
}

struct LgReport {
    std::array<double, 3> sigma_flat{};
    double sigma_weighted = 0;  // smallest singular value in the weighted space
    double eta = 0;
    double floor = 0;  // discretization floor
    double residual_B = 0;
    bool trivial_kernel = false;
};

inline LgReport lg_diagnostics(const GridOperator& op, const ProfileGrid& g, const Params& p) {
    LgReport r;
    const auto flat = smallest_singular(op.M, 3, true);
    for (int k = 0; k < 3; ++k) r.sigma_flat[k] = flat.sigma[k];
    r.eta = 0.5 * p.epsilon * p.delta;
    const auto w = smallest_singular(conjugate_weight(op, r.eta), 1);
    r.sigma_weighted = w.sigma[0];
    double nrm = 0;
    for (int k = 0; k < op.M.outerSize(); ++k) {
        double s = 0;
        for (SpMat::InnerIterator it(op.M, k); it; ++it) s += std::abs(it.value());
        nrm = std::max(nrm, s);
    }
    r.floor = 1e3 * std::numeric_limits<double>::epsilon() * nrm;
    r.residual_B = kernel_residual_Lg(op, g);
    r.trivial_kernel = r.sigma_weighted > r.floor;
    return r;
}

// ---- explicit inverse of L_g on the solvable subspace ----

namespace detail {
inline std::vector<double> cumulative_from_left(const std::vector<double>& f, double h) {
    std::vector<double> rev(f.rbegin(), f.rend()), C;
    cumulative_from_right(rev, h, C);
    return {C.rbegin(), C.rend()};
}
}  // namespace detail

struct PseudoInverse {
    std::vector<double> u;
    double solvability_defect = 0;  // int f B dx
};

// u with L_g u = f, f orthogonal to B; double integrals by nested fourth-order quadrature.
// The x <= 0 branch carries the multiple of B that makes u continuous at 0.
inline PseudoInverse lg_pseudo_inverse(const std::vector<double>& f, const ProfileGrid& g,
                                       const Params& p, double rel_tol = 1e-8) {
    const std::size_t n = g.size();
    if (f.size() != n) throw DomainError("lg_pseudo_inverse: size mismatch");
    std::size_t i0 = n;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(g.x[i]) < 1e-9 * g.h) i0 = i;
    if (i0 == n) throw DomainError("lg_pseudo_inverse: grid must contain x = 0");
    std::vector<double> fb(n), afb(n), ib2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double B = g.s[i][iB0];
        fb[i] = f[i] * B;
        afb[i] = std::abs(fb[i]);
        ib2[i] = 1.0 / (B * B);
    }
    PseudoInverse out;
    const std::vector<double> R0 = [&] {
        std::vector<double> C;
        detail::cumulative_from_right(fb, g.h, C);
        return C;
    }();
    out.solvability_defect = R0[0];
    const double scale = trapezoid(afb, g.h);
    if (std::abs(out.solvability_defect) > rel_tol * std::max(scale, 1e-300))
        throw SolvabilityViolation("lg_pseudo_inverse: int f B dx = " +
                                       std::to_string(out.solvability_defect) + " is not zero",
                                   out.solvability_defect);
    if (scale == 0) {
        out.u.assign(n, 0.0);
        return out;
    }
    // Every cumulative integral is anchored at x = 0: 1/B^2 is huge on the far left and
    // differences of integrals taken from the grid end would cancel catastrophically.
    auto right_part = [&](const std::vector<double>& v) {  // int_0^x, x >= 0
        std::vector<double> sub(v.begin() + long(i0), v.end());
        return detail::cumulative_from_left(sub, g.h);
    };
    auto left_part = [&](const std::vector<double>& v) {  // int_x^0, x <= 0
        std::vector<double> sub(v.begin(), v.begin() + long(i0) + 1), C;
        detail::cumulative_from_right(sub, g.h, C);
        return C;
    };
    const auto Gr = right_part(ib2), Gl = left_part(ib2);
    std::vector<double> G(n), fbg(n);
    for (std::size_t i = 0; i < n; ++i) G[i] = i >= i0 ? Gr[i - i0] : -Gl[i];
    for (std::size_t i = 0; i < n; ++i) fbg[i] = fb[i] * G[i];
    std::vector<double> I1;  // int_x^end f B G
    detail::cumulative_from_right(fbg, g.h, I1);
    const std::vector<double> J0 = detail::cumulative_from_left(fb, g.h);  // int_start^x f B
    const auto K = left_part(fbg);                                        // int_x^0 f B G
    const double e2 = p.epsilon * p.epsilon;
    out.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double B = g.s[i][iB0];
        out.u[i] = i >= i0 ? e2 * B * (I1[i] - G[i] * R0[i]) : e2 * B * (G[i] * J0[i] + K[i] + I1[i0]);
    }
    return out;
}

// ---- essential spectra of the far-field operators ----

enum class Side { minus, plus };
enum class OperatorKind { M, L };

struct SpectrumEdge {
    double block_A = 0, block_C = 0;  // per-block edges (M only; L uses block_A)
    double stated = 0;                // -max{2, g-1} for M
    double union_edge = 0;            // supremum of the union of the block spectra
};

inline SpectrumEdge asymptotic_spectrum(double g, Side side, OperatorKind op) {
    SpectrumEdge e;
    if (op == OperatorKind::M) {
        // A-block: -2 at M-, -(g-1) at M+; the C-block swaps them.
        e.block_A = side == Side::minus ? -2.0 : -(g - 1.0);
        e.block_C = side == Side::minus ? -(g - 1.0) : -2.0;
        e.stated = -std::max(2.0, g - 1.0);
        e.union_edge = std::max(e.block_A, e.block_C);
    } else {
        e.block_A = e.block_C = side == Side::minus ? -(g - 1.0) : 0.0;
        e.stated = e.union_edge = e.block_A;
    }
    return e;
}

}  // namespace hetero
