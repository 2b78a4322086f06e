// Acceptance checks 1-10, one PASS/FAIL line each.

#include <dgmf/bench.h>

#include "reference_sip.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace dgmf;

namespace
{
  std::mt19937 rng(2024);

  std::vector<double> random_vector(std::size_t n)
  {
    std::uniform_real_distribution<double> dist(-1., 1.);
    std::vector<double> v(n);
    for (auto &x : v)
      x = dist(rng);
    return v;
  }

  double norm(std::span<const double> v)
  {
    double s = 0.;
    for (const double x : v)
      s += x * x;
    return std::sqrt(s);
  }

  double diff_norm(std::span<const double> a, std::span<const double> b)
  {
    double s = 0.;
    for (std::size_t i = 0; i < a.size(); ++i)
      s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }

  const BasisKind all_kinds[] = {BasisKind::hermite_like,
                                 BasisKind::nodal_gauss_lobatto,
                                 BasisKind::nodal_gauss};

  struct Outcome
  {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string &what)
    {
      if (!ok)
        {
          if (pass)
            detail << "failed: ";
          else
            detail << "; ";
          detail << what;
          pass = false;
        }
    }
  };

  int n_failed = 0;

  void run(unsigned id, const char *name, double limit_seconds, const std::function<void(Outcome &)> &body)
  {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try
      {
        body(o);
      }
    catch (const std::exception &e)
      {
        o.require(false, std::string("exception: ") + e.what());
      }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (t > limit_seconds)
      o.require(false, "runtime " + std::to_string(t) + " s above " + std::to_string(limit_seconds) + " s");
    std::printf("%s criterion %u (%s) [%.2f s] %s\n", o.pass ? "PASS" : "FAIL", id, name, t, o.detail.str().c_str());
    std::fflush(stdout);
    n_failed += !o.pass;
  }

  // monomial coefficients of w * prod (x - r)
  std::vector<double> expand(double w, const std::vector<double> &roots)
  {
    std::vector<double> c = {w};
    for (const double r : roots)
      {
        std::vector<double> next(c.size() + 1, 0.);
        for (std::size_t k = 0; k < c.size(); ++k)
          {
            next[k + 1] += c[k];
            next[k] -= r * c[k];
          }
        c = next;
      }
    return c;
  }

  void closed_forms(Outcome &o)
  {
    const double rm = 0.5 - std::sqrt(1. / 44.), rp = 0.5 + std::sqrt(1. / 44.);
    const double c2 = 242. * std::sqrt(44.) / 25.;
    const std::vector<std::vector<double>> expected[] = {
      {expand(1., {1., 1.}), expand(-2., {0., 1.}), expand(1., {0., 0.})},
      {expand(-3.5, {2. / 7., 1., 1.}), expand(5.5, {0., 1., 1.}), expand(-5.5, {0., 0., 1.}),
       expand(3.5, {0., 0., 5. / 7.})},
      {expand(12., {1. / 6., 0.5, 1., 1.}), expand(-20., {0., 0.5, 1., 1.}), expand(16., {0., 0., 1., 1.}),
       expand(-20., {0., 0., 0.5, 1.}), expand(12., {0., 0., 0.5, 5. / 6.})},
      {expand(-198. / 5., {1. / 9., rm, rp, 1., 1.}), expand(1694. / 25., {0., rm, rp, 1., 1.}),
       expand(-c2, {0., 0., rp, 1., 1.}), expand(c2, {0., 0., rm, 1., 1.}),
       expand(-1694. / 25., {0., 0., rm, rp, 1.}), expand(198. / 5., {0., 0., rm, rp, 8. / 9.})}};
    double worst = 0.;
    for (unsigned p = 2; p <= 5; ++p)
      {
        const DenseMatrix c = build_basis(p, BasisKind::hermite_like).coefficients();
        const auto &e = expected[p - 2];
        for (std::size_t i = 0; i <= p; ++i)
          for (std::size_t k = 0; k <= p; ++k)
            worst = std::max(worst, std::abs(c(i, k) - e[i][k]) / std::max(1., std::abs(e[i][k])));
      }
    const Basis1D b3 = build_basis(3, BasisKind::hermite_like);
    o.require(std::abs(b3.free_root - 2. / 7.) <= 1e-12, "xi_1 at p=3");
    o.require(std::abs(b3.alpha1 - 5.5) <= 1e-12, "alpha_1 at p=3");
    o.require(worst <= 1e-12, "coefficient deviation " + std::to_string(worst));
    o.detail << "max deviation " << worst;
  }

  void conditioning(Outcome &o)
  {
    auto cond = [](unsigned p, BasisKind kind) {
      return mass_condition(build_basis(p, kind), gauss_rule(p + 1, QuadratureKind::gauss));
    };
    const struct
    {
      unsigned p;
      BasisKind kind;
      double value;
    } table[] = {{3, BasisKind::hermite_like, 17.2},        {5, BasisKind::hermite_like, 16.0},
                 {10, BasisKind::hermite_like, 20.7},       {20, BasisKind::hermite_like, 35.7},
                 {3, BasisKind::nodal_gauss_lobatto, 8.65}, {10, BasisKind::nodal_gauss_lobatto, 19.9}};
    for (const auto &row : table)
      {
        const double c = cond(row.p, row.kind);
        o.require(std::abs(c - row.value) <= 0.05,
                  std::string(to_string(row.kind)) + " p=" + std::to_string(row.p) + ": " + std::to_string(c));
      }
    for (const auto [p, value] : {std::pair{3u, 1.06e3}, std::pair{8u, 2.85e5}})
      {
        const double c = hermite_legendre_condition(p);
        o.require(std::abs(c / value - 1.) <= 0.01, "Hermite+Legendre p=" + std::to_string(p) + ": " + std::to_string(c));
      }
    if (o.pass)
      o.detail << "8 table entries within tolerance";
  }

  void oracle(Outcome &o)
  {
    double worst_apply = 0., worst_sym = 0.;
    unsigned cases = 0;
    for (const auto kind : all_kinds)
      for (unsigned p = 1; p <= 4; ++p)
        for (const Levels l : {Levels{0, 0, 0}, Levels{1, 1, 1}})
          for (const bool deformed : {false, true})
            {
              const AffineHexMesh mesh =
                deformed ? build_mesh(l, benchmark_box(), benchmark_geometry()) : build_mesh(l);
              const Basis1D basis = build_basis(p, kind);
              const SipOperator<double> op(basis, mesh);
              const DenseMatrix ref = reference::sip_matrix(basis, mesh);
              const std::vector<double> x = random_vector(op.n_dofs());
              const std::vector<double> y = op.apply(x);
              const std::vector<double> y_ref = ref * std::span<const double>(x);
              worst_apply = std::max(worst_apply, diff_norm(y, y_ref) / norm(y_ref));

              const DenseMatrix a = assemble_dense(op);
              worst_sym = std::max(worst_sym, (a - a.transpose()).linfty_norm() / a.linfty_norm());
              bool pd = true;
              try
                {
                  cholesky(a);
                }
              catch (const NumericalError &)
                {
                  pd = false;
                }
              o.require(pd, std::string("not positive definite: ") + std::string(to_string(kind)) +
                              " p=" + std::to_string(p));
              ++cases;
            }
    o.require(worst_apply <= 1e-12, "apply deviation " + std::to_string(worst_apply));
    o.require(worst_sym <= 1e-12, "asymmetry " + std::to_string(worst_sym));
    o.detail << cases << " cases, max apply deviation " << worst_apply << ", max asymmetry " << worst_sym;
  }

  void face_access(Outcome &o)
  {
    for (const auto kind : all_kinds)
      for (const unsigned p : {2u, 5u})
        {
          const SipOperator<double> op(build_basis(p, kind), build_mesh({2, 2, 2}));
          const std::size_t reads = op.distinct_reads(op.mesh().element_at({1, 2, 1}));
          const std::size_t n = p + 1;
          const std::size_t formula = kind == BasisKind::hermite_like ? n * n * n + 12 * n * n : 7 * n * n * n;
          o.require(reads == formula && double(reads) == model_access(p, 3, kind),
                    std::string(to_string(kind)) + " p=" + std::to_string(p) + " reads " + std::to_string(reads));
          o.detail << to_string(kind) << " p=" << p << ": " << reads << "  ";
        }
  }

  std::vector<double> mg_solve(const SipOperator<double> &op, const Basis1D &basis, const std::vector<double> &b)
  {
    MultigridOptions options;
    options.smoother = SmootherKind::fdm;
    const MgHierarchy<double> mg(basis, op.mesh(), options);
    const auto apply_a = [&op](std::span<double> dst, std::span<const double> src) { op.apply(src, dst); };
    return pcg_solve(apply_a, vcycle_preconditioner(mg), b, 1e-13, 200).solution;
  }

  void consistency(Outcome &o)
  {
    // same discrete solution in all bases
    for (const unsigned p : {2u, 3u})
      {
        const Levels l = {2, 2, 2};
        const AffineHexMesh mesh = build_mesh(l, experiment_box(l), DenseMatrix::identity(3));
        std::vector<double> errors;
        for (const auto kind : all_kinds)
          {
            const Basis1D basis = build_basis(p, kind);
            const SipOperator<double> op(basis, mesh);
            errors.push_back(l2_error(op, mg_solve(op, basis, manufactured_rhs(op))));
          }
        const double spread = std::max(std::abs(errors[1] / errors[0] - 1.), std::abs(errors[2] / errors[0] - 1.));
        o.require(spread <= 1e-10, "p=" + std::to_string(p) + " bases disagree by " + std::to_string(spread));
        o.detail << "p=" << p << " spread " << spread << "  ";
      }

    // convergence order between the two finest meshes
    for (const unsigned p : {2u, 3u})
      {
        const Basis1D basis = build_basis(p, BasisKind::hermite_like);
        double err[2];
        for (unsigned i = 0; i < 2; ++i)
          {
            const unsigned L = 4 + i;
            const Levels l = {L, L, L};
            const AffineHexMesh mesh = build_mesh(l, experiment_box(l), DenseMatrix::identity(3));
            const SipOperator<double> op(basis, mesh);
            err[i] = l2_error(op, mg_solve(op, basis, manufactured_rhs(op)));
          }
        const double ratio = err[0] / err[1], target = std::pow(2., p + 1);
        o.require(std::abs(ratio / target - 1.) <= 0.1,
                  "p=" + std::to_string(p) + " rate " + std::to_string(ratio));
        o.detail << "p=" << p << " ratio " << ratio << " (" << target << ")  ";
      }
  }

  void chebyshev(Outcome &o)
  {
    // A = diag(lambda), P = I
    const std::size_t n = 20;
    std::vector<double> lambda(n);
    for (std::size_t i = 0; i < n; ++i)
      lambda[i] = 0.01 + 1.99 * std::pow(double(i) / (n - 1), 1.5);
    const double lmax = 2., lower = 0.06 * lmax, upper = 1.2 * lmax;
    const VectorFunction<double> apply_a = [&](std::span<double> dst, std::span<const double> src) {
      for (std::size_t i = 0; i < n; ++i)
        dst[i] = lambda[i] * src[i];
    };
    const VectorFunction<double> identity = [](std::span<double> dst, std::span<const double> src) {
      std::copy(src.begin(), src.end(), dst.begin());
    };
    const std::vector<double> x = random_vector(n), e0 = random_vector(n);
    std::vector<double> b(n);
    apply_a(b, x);
    double worst = 0.;
    for (unsigned k = 1; k <= 5; ++k)
      for (const bool zero : {false, true})
        {
          std::vector<double> u(n);
          for (std::size_t i = 0; i < n; ++i)
            u[i] = x[i] + e0[i];
          chebyshev_iteration<double>(apply_a, identity, u, b, lower, upper, k, zero);
          for (std::size_t i = 0; i < n; ++i)
            {
              const double start = zero ? -x[i] : e0[i];
              const double expected = chebyshev_residual_polynomial(k, lambda[i], lower, upper) * start;
              worst = std::max(worst, std::abs((u[i] - x[i]) - expected));
            }
        }
    o.require(worst <= 1e-12, "per-mode deviation " + std::to_string(worst));

    // merged and separate smoothers on an operator
    const AffineHexMesh mesh = build_mesh({1, 1, 1}, benchmark_box(), benchmark_geometry());
    const SipOperator<double> op(build_basis(3, BasisKind::hermite_like), mesh);
    const PointJacobi<double> jac(op);
    double worst_variant = 0.;
    for (unsigned k = 1; k <= 5; ++k)
      {
        ChebyshevOptions merged, separate;
        merged.degree = separate.degree = k;
        separate.merged = false;
        const ChebyshevSmoother<double> s1(op, jac, 2., merged), s2(op, jac, 2., separate);
        const std::vector<double> rhs = random_vector(op.n_dofs());
        for (const bool zero : {true, false})
          {
            std::vector<double> u1 = random_vector(op.n_dofs()), u2 = u1;
            s1.smooth(u1, rhs, zero);
            s2.smooth(u2, rhs, zero);
            worst_variant = std::max(worst_variant, diff_norm(u1, u2) / norm(u1));
          }
      }
    o.require(worst_variant <= 1e-13, "merged vs separate " + std::to_string(worst_variant));
    o.detail << "max per-mode deviation " << worst << ", merged vs separate " << worst_variant;
  }

  void fdm(Outcome &o)
  {
    const Box box = {{{0., 1.}, {0., 2.}, {0., 0.5}}};
    const AffineHexMesh mesh = build_mesh({2, 2, 2}, box, DenseMatrix::identity(3));
    const std::size_t e = mesh.element_at({1, 2, 1});
    double worst = 0., worst_eig = 0.;
    for (const unsigned p : {2u, 3u, 5u})
      {
        std::vector<std::array<std::vector<double>, 3>> eigenvalues;
        for (const auto kind : all_kinds)
          {
            const SipOperator<double> op(build_basis(p, kind), mesh);
            const std::size_t npc = op.dofs_per_cell();
            // element block of the operator, one column per unit vector
            DenseMatrix block(npc, npc);
            std::vector<double> unit(op.n_dofs(), 0.), col(op.n_dofs());
            for (std::size_t j = 0; j < npc; ++j)
              {
                unit[e * npc + j] = 1.;
                op.apply(unit, col);
                unit[e * npc + j] = 0.;
                for (std::size_t i = 0; i < npc; ++i)
                  block(i, j) = col[e * npc + i];
              }
            const FdmPreconditioner<double> full(op);
            const FdmPreconditioner<double> single(full.blocks(), 1);
            for (unsigned trial = 0; trial < 3; ++trial)
              {
                const std::vector<double> x = random_vector(npc);
                const std::vector<double> ax = block * std::span<const double>(x);
                std::vector<double> z(npc);
                single.vmult(z, ax);
                worst = std::max(worst, diff_norm(z, x) / norm(x));
              }
            std::array<std::vector<double>, 3> ev;
            for (unsigned d = 0; d < 3; ++d)
              {
                ev[d] = full.blocks()[d].eigenvalues;
                std::sort(ev[d].begin(), ev[d].end());
              }
            eigenvalues.push_back(ev);
          }
        for (std::size_t k = 1; k < eigenvalues.size(); ++k)
          for (unsigned d = 0; d < 3; ++d)
            for (std::size_t i = 0; i < eigenvalues[0][d].size(); ++i)
              worst_eig = std::max(worst_eig, std::abs(eigenvalues[k][d][i] / eigenvalues[0][d][i] - 1.));
      }
    o.require(worst <= 1e-10, "inverse deviation " + std::to_string(worst));
    o.require(worst_eig <= 1e-10, "eigenvalue deviation " + std::to_string(worst_eig));
    o.detail << "max |Fx - x|/|x| " << worst << ", max eigenvalue deviation " << worst_eig;
  }

  BenchConfig solve_config(unsigned p, BasisKind basis, SmootherKind smoother, Precision precision)
  {
    BenchConfig c;
    c.command = "solve";
    c.degree = p;
    c.basis = basis;
    c.smoother = smoother;
    c.precision = precision;
    c.levels = {4, 4, 4};
    c.threads = n_threads();
    return c;
  }

  struct CountCase
  {
    const char *label;
    unsigned p;
    BasisKind basis;
    SmootherKind smoother;
    unsigned expected, tolerance;
  };

  const CountCase count_cases[] = {
    {"p=3 GL point-Jacobi", 3, BasisKind::nodal_gauss_lobatto, SmootherKind::point_jacobi, 7, 2},
    {"p=3 Hermite point-Jacobi", 3, BasisKind::hermite_like, SmootherKind::point_jacobi, 29, 5},
    {"p=3 Hermite FDM", 3, BasisKind::hermite_like, SmootherKind::fdm, 7, 2},
    {"p=5 GL point-Jacobi", 5, BasisKind::nodal_gauss_lobatto, SmootherKind::point_jacobi, 8, 2},
    {"p=5 Hermite FDM", 5, BasisKind::hermite_like, SmootherKind::fdm, 7, 2}};

  unsigned mixed_n9[5];

  void iteration_counts(Outcome &o)
  {
    for (unsigned i = 0; i < 5; ++i)
      {
        const CountCase &row = count_cases[i];
        const ExperimentRecord r = run_solver_experiment(solve_config(row.p, row.basis, row.smoother, Precision::mixed));
        mixed_n9[i] = *r.n9;
        const int diff = int(*r.n9) - int(row.expected);
        o.require(std::abs(diff) <= int(row.tolerance),
                  std::string(row.label) + " n9=" + std::to_string(*r.n9));
        o.detail << row.label << " " << *r.n9 << ", ";
      }
    const ExperimentRecord t = run_solver_experiment(
      solve_config(3, BasisKind::hermite_like, SmootherKind::transformed_gl, Precision::mixed));
    o.require(*t.n9 == mixed_n9[0], "transformed-GL n9=" + std::to_string(*t.n9));
    o.detail << "p=3 Hermite transformed-GL " << *t.n9;
  }

  void mixed_precision(Outcome &o)
  {
    for (const unsigned i : {0u, 1u, 2u})
      {
        const CountCase &row = count_cases[i];
        const ExperimentRecord r =
          run_solver_experiment(solve_config(row.p, row.basis, row.smoother, Precision::double_precision));
        const int diff = int(mixed_n9[i]) - int(*r.n9);
        o.require(std::abs(diff) <= 1, std::string(row.label) + " double " + std::to_string(*r.n9) + " mixed " +
                                         std::to_string(mixed_n9[i]));
        o.detail << row.label << " double " << *r.n9 << " mixed " << mixed_n9[i] << ", ";
      }
  }

  void flop_model(Outcome &o)
  {
    const unsigned degrees[] = {1, 2, 3, 4, 5, 7, 9, 11, 16};
    const double published[3][9] = {{244, 191, 218, 206, 225, 241, 260, 281, 333},
                                     {258, 210, 240, 229, 250, 267, 287, 308, 361},
                                     {204, 168, 180, 171, 180, 186, 194, 204, 229}};
    double worst = 0.;
    for (unsigned k = 0; k < 3; ++k)
      for (unsigned i = 0; i < 9; ++i)
        {
          const double dev = std::abs(model_flops(degrees[i], all_kinds[k]) / published[k][i] - 1.);
          worst = std::max(worst, dev);
          o.require(dev <= 0.15, std::string(to_string(all_kinds[k])) + " p=" + std::to_string(degrees[i]));
        }
    o.detail << "27 entries, max deviation " << 100. * worst << "%";
  }
} // namespace

int main()
{
  run(1, "Hermite-like closed forms", 1., closed_forms);
  run(2, "mass matrix conditioning", 5., conditioning);
  run(3, "dense oracle equivalence", 60., oracle);
  run(4, "face access minimality", 10., face_access);
  run(5, "consistent integration and convergence", 300., consistency);
  run(6, "Chebyshev oracle", 1., chebyshev);
  run(7, "FDM exactness", 10., fdm);
  run(8, "multigrid iteration counts", 600., iteration_counts);
  run(9, "mixed precision", 300., mixed_precision);
  run(10, "FLOP model", 1., flop_model);
  std::printf("%d of 10 criteria failed\n", n_failed);
  return n_failed == 0 ? 0 : 1;
}
