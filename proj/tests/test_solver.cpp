#include <dgmf/solver.h>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dgmf;

namespace
{
  std::mt19937 rng(5);

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

  double energy(const SipOperator<double> &op, const std::vector<double> &x)
  {
    const auto ax = op.apply(x);
    double s = 0.;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += x[i] * ax[i];
    return std::sqrt(s);
  }

  DenseMatrix diagonal_matrix(const std::vector<double> &d)
  {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      m(i, i) = d[i];
    return m;
  }

  AffineHexMesh cartesian_mesh(const Levels &l)
  {
    return build_mesh(l, experiment_box(l), DenseMatrix::identity(3));
  }

  AffineHexMesh deformed_mesh(const Levels &l)
  {
    return build_mesh(l, benchmark_box(), benchmark_geometry());
  }

  VectorFunction<double> as_function(const SipOperator<double> &op)
  {
    return [&op](std::span<double> dst, std::span<const double> src) { op.apply(src, dst); };
  }
} // namespace

TEST_CASE("Lanczos estimate of the largest eigenvalue")
{
  const std::size_t n = 20;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = double(i + 1);
  const VectorFunction<double> diag = [&d](std::span<double> y, std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = d[i] * x[i];
  };
  const VectorFunction<double> identity = [](std::span<double> y, std::span<const double> x) {
    std::copy(x.begin(), x.end(), y.begin());
  };
  const VectorFunction<double> half = [](std::span<double> y, std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = 0.5 * x[i];
  };
  const double l = lanczos_lambda_max<double>(n, diag, identity, 15);
  CHECK(l <= 20. * (1. + 1e-12));
  CHECK(l >= 19.5);
  // the full Krylov space is exact
  CHECK(lanczos_lambda_max<double>(n, diag, identity, 20) == doctest::Approx(20.).epsilon(1e-10));
  CHECK(lanczos_lambda_max<double>(n, diag, half, 20) == doctest::Approx(10.).epsilon(1e-10));
  // immediate breakdown
  CHECK(lanczos_lambda_max<double>(n, identity, identity, 15) == doctest::Approx(1.).epsilon(1e-14));

  // a real operator with the Jacobi preconditioner against the dense
  // generalized eigenvalue
  const SipOperator<double> op(build_basis(2, BasisKind::hermite_like), deformed_mesh({1, 1, 1}));
  const PointJacobi<double> jac(op);
  const DenseMatrix a = assemble_dense(op);
  const double exact = generalized_symmetric_eigen(a, diagonal_matrix(op.diagonal())).values.back();
  const double est = lanczos_lambda_max<double>(
    op.n_dofs(), as_function(op),
    [&jac](std::span<double> y, std::span<const double> x) { jac.vmult(y, x); });
  CHECK(est <= exact * (1. + 1e-10));
  CHECK(est >= 0.9 * exact);
}

TEST_CASE("Chebyshev degree for a residual reduction")
{
  const unsigned k = chebyshev_degree_for_reduction(20., 1e-5);
  const double r = (std::sqrt(20.) - 1.) / (std::sqrt(20.) + 1.);
  CHECK(2. * std::pow(r, k) <= 1e-5);
  CHECK(2. * std::pow(r, k - 1) > 1e-5);
  CHECK(k == 27);
  CHECK(chebyshev_degree_for_reduction(1e12, 1e-12, 200) == 200);
  CHECK_THROWS_AS(chebyshev_degree_for_reduction(0.5, 1e-5), ParameterError);
}

TEST_CASE("Chebyshev iteration follows the closed-form residual polynomial")
{
  const SipOperator<double> op(build_basis(2, BasisKind::hermite_like), deformed_mesh({1, 1, 0}));
  const PointJacobi<double> jac(op);
  const DenseMatrix a = assemble_dense(op);
  const DenseMatrix dmat = diagonal_matrix(op.diagonal());
  const SymmetricEigenpairs eig = generalized_symmetric_eigen(a, dmat);
  const std::size_t n = op.n_dofs();
  const double lmax = eig.values.back();

  for (const bool merged : {true, false})
    for (const unsigned degree : {1u, 2u, 5u, 9u})
      {
        ChebyshevOptions options;
        options.degree = degree;
        options.merged = merged;
        const ChebyshevSmoother<double> cheb(op, jac, lmax, options);

        // e_k = q_k(P^{-1} A) e_0 with c = Z^T D e_0
        const std::vector<double> x = random_vector(n);
        const std::vector<double> b = op.apply(x);
        const std::vector<double> e0 = random_vector(n);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i)
          u[i] = x[i] + e0[i];

        auto predicted = [&](const std::vector<double> &err) {
          const std::vector<double> de = dmat * std::span<const double>(err);
          std::vector<double> out(n, 0.);
          for (std::size_t j = 0; j < n; ++j)
            {
              double c = 0.;
              for (std::size_t i = 0; i < n; ++i)
                c += eig.vectors(i, j) * de[i];
              c *= chebyshev_residual_polynomial(degree, eig.values[j], cheb.range_lower(),
                                                 cheb.range_upper());
              for (std::size_t i = 0; i < n; ++i)
                out[i] += eig.vectors(i, j) * c;
            }
          return out;
        };

        cheb.smooth(u, b, false);
        std::vector<double> err(n);
        for (std::size_t i = 0; i < n; ++i)
          err[i] = u[i] - x[i];
        const auto expected = predicted(e0);
        CHECK(diff_norm(err, expected) <= 1e-10 * norm(e0));

        // zero start: e_0 = -x
        std::vector<double> v(n, 7.);
        cheb.smooth(v, b, true);
        std::vector<double> minus_x(n);
        for (std::size_t i = 0; i < n; ++i)
          {
            err[i] = v[i] - x[i];
            minus_x[i] = -x[i];
          }
        CHECK(diff_norm(err, predicted(minus_x)) <= 1e-10 * norm(x));
      }
}

TEST_CASE("merged and separate Chebyshev agree")
{
  for (const auto kind : {SmootherKind::point_jacobi, SmootherKind::transformed_gl, SmootherKind::fdm})
    {
      const AffineHexMesh mesh = kind == SmootherKind::fdm ? cartesian_mesh({2, 1, 1}) : deformed_mesh({2, 1, 1});
      const SipOperator<double> op(build_basis(3, BasisKind::hermite_like), mesh);
      const auto prec = make_preconditioner(op, kind);
      ChebyshevOptions merged, separate;
      separate.merged = false;
      const ChebyshevSmoother<double> s1(op, *prec, 2.5, merged), s2(op, *prec, 2.5, separate);
      const std::vector<double> b = random_vector(op.n_dofs());
      for (const bool zero : {true, false})
        {
          std::vector<double> u1 = random_vector(op.n_dofs()), u2 = u1;
          s1.smooth(u1, b, zero);
          s2.smooth(u2, b, zero);
          CHECK(diff_norm(u1, u2) <= 1e-13 * norm(u1));
        }
    }
}

TEST_CASE("generic Chebyshev iteration")
{
  // diagonal matrix, identity preconditioner: each mode is scaled by q_k
  const std::size_t n = 20;
  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i)
    lambda[i] = 0.05 + 0.1 * double(i);
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
  for (unsigned k = 1; k <= 6; ++k)
    {
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i)
        u[i] = x[i] + e0[i];
      chebyshev_iteration<double>(apply_a, identity, u, b, 0.1, 2.2, k, false);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(u[i] - x[i] ==
              doctest::Approx(chebyshev_residual_polynomial(k, lambda[i], 0.1, 2.2) * e0[i]).scale(1.).epsilon(1e-13));
    }

  // same iterates as the element-wise smoother
  const SipOperator<double> op(build_basis(2, BasisKind::nodal_gauss), deformed_mesh({1, 1, 1}));
  const PointJacobi<double> jac(op);
  ChebyshevOptions options;
  options.degree = 4;
  const ChebyshevSmoother<double> cheb(op, jac, 2., options);
  const std::vector<double> rhs = random_vector(op.n_dofs());
  for (const bool zero : {true, false})
    {
      std::vector<double> u1 = random_vector(op.n_dofs()), u2 = u1;
      cheb.smooth(u1, rhs, zero);
      chebyshev_iteration<double>(as_function(op),
                                  [&jac](std::span<double> dst, std::span<const double> src) { jac.vmult(dst, src); },
                                  u2, rhs, cheb.range_lower(), cheb.range_upper(), 4, zero);
      CHECK(diff_norm(u1, u2) <= 1e-13 * norm(u1));
    }

  std::vector<double> u(n);
  CHECK_THROWS_AS(chebyshev_iteration<double>(apply_a, identity, u, b, 0., 1., 2, true), ParameterError);
}

TEST_CASE("transformed Gauss-Lobatto preconditioner")
{
  const unsigned p = 2, n = p + 1;
  const AffineHexMesh mesh = deformed_mesh({1, 0, 1});
  const Basis1D hermite = build_basis(p, BasisKind::hermite_like);
  const Basis1D gl = build_basis(p, BasisKind::nodal_gauss_lobatto);
  const SipOperator<double> op(hermite, mesh);
  const auto prec = make_transformed_gl(op);
  const std::vector<double> d_gl = SipOperator<double>(gl, mesh).diagonal();

  // dense C x C x C
  const DenseMatrix c = change_of_basis(hermite, gl);
  const std::size_t npc = n * n * n;
  DenseMatrix c3(npc, npc);
  for (unsigned i2 = 0; i2 < n; ++i2)
    for (unsigned i1 = 0; i1 < n; ++i1)
      for (unsigned i0 = 0; i0 < n; ++i0)
        for (unsigned j2 = 0; j2 < n; ++j2)
          for (unsigned j1 = 0; j1 < n; ++j1)
            for (unsigned j0 = 0; j0 < n; ++j0)
              c3(i0 + n * (i1 + n * i2), j0 + n * (j1 + n * j2)) = c(i0, j0) * c(i1, j1) * c(i2, j2);

  const std::vector<double> r = random_vector(op.n_dofs());
  std::vector<double> z(op.n_dofs());
  prec->vmult(z, r);
  const DenseMatrix c3t = c3.transpose();
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
    {
      const std::span<const double> re(r.data() + e * npc, npc);
      std::vector<double> t = c3t * re;
      for (std::size_t i = 0; i < npc; ++i)
        t[i] /= d_gl[e * npc + i];
      const std::vector<double> expected = c3 * std::span<const double>(t);
      CHECK(diff_norm(std::span<const double>(z.data() + e * npc, npc), expected) <= 1e-13 * norm(expected));
    }

  // on a Gauss-Lobatto operator it reduces to point Jacobi
  const SipOperator<double> gl_op(gl, mesh);
  const auto same = make_transformed_gl(gl_op);
  const PointJacobi<double> jac(gl_op);
  std::vector<double> z1(op.n_dofs()), z2(op.n_dofs());
  same->vmult(z1, r);
  jac.vmult(z2, r);
  CHECK(diff_norm(z1, z2) <= 1e-13 * norm(z2));
}

TEST_CASE("fast diagonalization inverts the interior element block")
{
  const unsigned p = 2;
  const Box box = {{{0., 1.}, {0., 2.}, {0., 0.5}}};
  const AffineHexMesh mesh = build_mesh({2, 2, 2}, box, DenseMatrix::identity(3));
  for (const auto kind : {BasisKind::hermite_like, BasisKind::nodal_gauss_lobatto, BasisKind::nodal_gauss})
    {
      const SipOperator<double> op(build_basis(p, kind), mesh);
      const FdmPreconditioner<double> fdm(op);
      const DenseMatrix block = fdm_block_matrix(fdm.blocks());

      // equals the element block of the assembled operator
      const DenseMatrix a = assemble_dense(op);
      const std::size_t npc = op.dofs_per_cell(), e = mesh.element_at({1, 2, 1});
      double max_diff = 0.;
      for (std::size_t i = 0; i < npc; ++i)
        for (std::size_t j = 0; j < npc; ++j)
          max_diff = std::max(max_diff, std::abs(block(i, j) - a(e * npc + i, e * npc + j)));
      CHECK(max_diff <= 1e-12 * block.linfty_norm());

      // and the preconditioner is its inverse
      const FdmPreconditioner<double> single(fdm.blocks(), 1);
      for (std::size_t j = 0; j < npc; ++j)
        {
          std::vector<double> col(npc), z(npc);
          for (std::size_t i = 0; i < npc; ++i)
            col[i] = block(i, j);
          single.vmult(z, col);
          for (std::size_t i = 0; i < npc; ++i)
            CHECK(std::abs(z[i] - (i == j ? 1. : 0.)) <= 1e-12);
        }

      // T^T M T = I
      for (const auto &blk : fdm.blocks())
        {
          const DenseMatrix id = blk.eigenvectors.transpose() * blk.mass * blk.eigenvectors;
          CHECK((id - DenseMatrix::identity(p + 1)).linfty_norm() <= 1e-12);
        }
    }

  // the 1D eigenvalues are a property of the space, not the basis
  const FdmBlock h = fdm_setup(build_basis(5, BasisKind::hermite_like), 0.25, 144.);
  const FdmBlock g = fdm_setup(build_basis(5, BasisKind::nodal_gauss), 0.25, 144.);
  for (std::size_t i = 0; i < h.eigenvalues.size(); ++i)
    CHECK(h.eigenvalues[i] == doctest::Approx(g.eigenvalues[i]).epsilon(1e-10));

  const SipOperator<double> deformed(build_basis(2, BasisKind::hermite_like), deformed_mesh({1, 1, 1}));
  CHECK_THROWS_AS(FdmPreconditioner<double>{deformed}, ParameterError);
}

TEST_CASE("transfer between levels")
{
  const unsigned p = 3;
  for (const auto kind : {BasisKind::hermite_like, BasisKind::nodal_gauss})
    for (const Levels fine_levels : {Levels{1, 1, 1}, Levels{2, 2, 1}, Levels{2, 1, 0}})
      {
        const Basis1D basis = build_basis(p, kind);
        const AffineHexMesh fine = deformed_mesh(fine_levels);
        const AffineHexMesh coarse = coarsen(fine);
        const Transfer<double> transfer(basis, coarse, fine);

        // polynomials are reproduced exactly
        const ScalarFunction f = [](const std::array<double, 3> &x) {
          return std::pow(x[0] - 0.3 * x[2], 3) + x[1] * x[2] - 0.5;
        };
        const std::vector<double> uc = project(basis, coarse, f);
        const std::vector<double> uf_expected = project(basis, fine, f);
        std::vector<double> uf(uf_expected.size());
        transfer.prolongate(uf, uc);
        CHECK(diff_norm(uf, uf_expected) <= 1e-12 * norm(uf_expected));

        // restriction is the transpose
        const std::vector<double> c = random_vector(uc.size()), r = random_vector(uf.size());
        std::vector<double> pc(uf.size()), rr(uc.size());
        transfer.prolongate(pc, c);
        transfer.restrict(rr, r);
        double s1 = 0., s2 = 0.;
        for (std::size_t i = 0; i < r.size(); ++i)
          s1 += r[i] * pc[i];
        for (std::size_t i = 0; i < c.size(); ++i)
          s2 += rr[i] * c[i];
        CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
      }

  const Basis1D basis = build_basis(2, BasisKind::hermite_like);
  CHECK_THROWS_AS(Transfer<double>(basis, build_mesh({1, 1, 1}), build_mesh({3, 1, 1})), ParameterError);
  CHECK_THROWS_AS(Transfer<double>(basis, build_mesh({1, 1, 1}), build_mesh({1, 1, 1})), ParameterError);
}

TEST_CASE("V-cycle contracts the error in the energy norm")
{
  for (const auto kind : {SmootherKind::point_jacobi, SmootherKind::transformed_gl, SmootherKind::fdm})
    {
      const AffineHexMesh mesh = cartesian_mesh({2, 2, 2});
      const Basis1D basis = build_basis(3, BasisKind::hermite_like);
      MultigridOptions options;
      options.smoother = kind;
      const MgHierarchy<double> mg(basis, mesh, options);
      CHECK(mg.n_levels() == 3);
      CHECK(mg.coarse_degree() == 27);
      const SipOperator<double> &op = mg.op(mg.n_levels() - 1);

      // e <- (I - B A) e
      std::vector<double> e = random_vector(op.n_dofs()), c(op.n_dofs());
      double before = energy(op, e);
      for (int it = 0; it < 3; ++it)
        {
          const auto ae = op.apply(e);
          mg.vcycle(c, ae);
          for (std::size_t i = 0; i < e.size(); ++i)
            e[i] -= c[i];
          const double after = energy(op, e);
          // point Jacobi is a poor smoother for the Hermite-like basis
          CHECK(after < (kind == SmootherKind::point_jacobi ? 0.85 : 0.25) * before);
          before = after;
        }
    }
}

TEST_CASE("multigrid preconditioned CG")
{
  const Basis1D basis = build_basis(3, BasisKind::hermite_like);
  std::vector<unsigned> counts;
  for (const Levels l : {Levels{1, 1, 1}, Levels{2, 2, 2}, Levels{3, 3, 2}})
    {
      const AffineHexMesh mesh = cartesian_mesh(l);
      MultigridOptions options;
      options.smoother = SmootherKind::fdm;
      const MgHierarchy<double> mg(basis, mesh, options);
      const SipOperator<double> &op = mg.op(mg.n_levels() - 1);
      const std::vector<double> b = manufactured_rhs(op);
      const SolveResult res = pcg_solve(as_function(op), vcycle_preconditioner(mg), b, 1e-9);
      counts.push_back(res.iterations);
      CHECK(res.final_residual <= 1e-9 * norm(b));
      CHECK(res.rate < 0.1);
      // the recursive residual matches the true one
      const auto ax = op.apply(res.solution);
      std::vector<double> r(b.size());
      for (std::size_t i = 0; i < b.size(); ++i)
        r[i] = b[i] - ax[i];
      CHECK(norm(r) <= 1e-8 * norm(b));
    }
  // mesh independence
  CHECK(counts[2] <= counts[1] + 2);

  // single precision multigrid inside double precision CG
  const AffineHexMesh mesh = cartesian_mesh({2, 2, 2});
  const MgHierarchy<double> mg64(basis, mesh);
  const MgHierarchy<float> mg32(basis, mesh);
  const SipOperator<double> &op = mg64.op(mg64.n_levels() - 1);
  const std::vector<double> b = manufactured_rhs(op);
  const SolveResult r64 = pcg_solve(as_function(op), vcycle_preconditioner(mg64), b, 1e-9);
  const SolveResult r32 = pcg_solve(as_function(op), vcycle_preconditioner(mg32), b, 1e-9);
  CHECK(r32.iterations <= r64.iterations + 1);
  CHECK(diff_norm(r32.solution, r64.solution) <= 1e-7 * norm(r64.solution));
}

TEST_CASE("conjugate gradients on small problems")
{
  const VectorFunction<double> identity = [](std::span<double> y, std::span<const double> x) {
    std::copy(x.begin(), x.end(), y.begin());
  };
  const std::vector<double> b = random_vector(30);
  const SolveResult r = pcg_solve(identity, identity, b);
  CHECK(r.iterations == 1);
  CHECK(diff_norm(r.solution, b) <= 1e-14);

  const SolveResult zero = pcg_solve(identity, identity, std::vector<double>(5, 0.));
  CHECK(zero.iterations == 0);

  const VectorFunction<double> negative = [](std::span<double> y, std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = -x[i];
  };
  CHECK_THROWS_AS(pcg_solve(negative, identity, b), NumericalError);

  std::vector<double> d(30);
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = std::pow(10., double(i % 10) / 2.);
  const VectorFunction<double> ill = [&d](std::span<double> y, std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = d[i] * x[i];
  };
  CHECK_THROWS_AS(pcg_solve(ill, identity, b, 1e-9, 3), NumericalError);
  const SolveResult full = pcg_solve(ill, identity, b, 1e-9, 200);
  CHECK(full.iterations <= 20);
}

TEST_CASE("smoother names")
{
  for (const auto k : {SmootherKind::point_jacobi, SmootherKind::transformed_gl, SmootherKind::fdm})
    CHECK(parse_smoother_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_smoother_kind("jacobi"), ParameterError);
}
