#include <dgmf/solver.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <type_traits>

namespace dgmf
{
  namespace
  {
    template <typename VA>
    std::vector<VA> &thread_buffer(int which, std::size_t size)
    {
      static thread_local std::vector<VA> buffers[5];
      auto &b = buffers[which];
      if (b.size() < size)
        b.resize(size);
      return b;
    }

    template <typename Number, typename VA>
    void gather_lanes(const Number *src, std::size_t first, unsigned lanes, std::size_t npc, VA *out)
    {
      constexpr int W = VA::width;
      for (std::size_t i = 0; i < npc; ++i)
        for (int v = 0; v < W; ++v)
          out[i][v] = v < int(lanes) ? src[(first + v) * npc + i] : Number(0);
    }

    template <typename Number, typename VA>
    void scatter_lanes(const VA *in, std::size_t first, unsigned lanes, std::size_t npc, Number *dst)
    {
      for (unsigned v = 0; v < lanes; ++v)
        {
          Number *o = dst + (first + v) * npc;
          for (std::size_t i = 0; i < npc; ++i)
            o[i] = in[i][v];
        }
    }

    template <typename Number>
    double dot(std::span<const Number> a, std::span<const Number> b)
    {
      double s = 0.;
      const std::size_t n = a.size();
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel for reduction(+ : s) schedule(static)
#endif
      for (std::size_t i = 0; i < n; ++i)
        s += double(a[i]) * double(b[i]);
      return s;
    }

    bool is_cartesian(const DenseMatrix &j)
    {
      double scale = 0.;
      for (unsigned r = 0; r < 3; ++r)
        for (unsigned c = 0; c < 3; ++c)
          scale = std::max(scale, std::abs(j(r, c)));
      for (unsigned r = 0; r < 3; ++r)
        for (unsigned c = 0; c < 3; ++c)
          if (r != c && std::abs(j(r, c)) > 1e-14 * scale)
            return false;
      return true;
    }
  } // namespace

  template <typename Number>
  void ElementPreconditioner<Number>::vmult(std::span<Number> dst, std::span<const Number> src) const
  {
    const std::size_t npc = dofs_per_cell(), n_el = n_elements();
    if (src.size() != npc * n_el || dst.size() != npc * n_el)
      throw ParameterError("ElementPreconditioner::vmult: vector size mismatch");
    const std::size_t n_batches = (n_el + W - 1) / W;
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel for schedule(static)
#endif
    for (std::size_t b = 0; b < n_batches; ++b)
      {
        auto &r = thread_buffer<VA>(2, npc);
        auto &z = thread_buffer<VA>(3, npc);
        const std::size_t first = b * W;
        const unsigned lanes = static_cast<unsigned>(std::min<std::size_t>(W, n_el - first));
        gather_lanes(src.data(), first, lanes, npc, r.data());
        apply_batch(first, lanes, r.data(), z.data());
        scatter_lanes(z.data(), first, lanes, npc, dst.data());
      }
  }

  // ---------------------------------------------------------------------

  template <typename Number>
  PointJacobi<Number>::PointJacobi(const SipOperator<Number> &op)
    : npc(op.dofs_per_cell())
    , inv_diag(op.diagonal())
  {
    for (auto &d : inv_diag)
      {
        if (!(d > 0))
          throw NumericalError("PointJacobi: non-positive diagonal entry");
        d = Number(1) / d;
      }
  }

  template <typename Number>
  PointJacobi<Number>::PointJacobi(std::vector<double> diagonal, std::size_t dofs_per_cell)
    : npc(dofs_per_cell)
  {
    if (npc == 0 || diagonal.size() % npc != 0)
      throw ParameterError("PointJacobi: diagonal size is not a multiple of dofs_per_cell");
    inv_diag.resize(diagonal.size());
    for (std::size_t i = 0; i < diagonal.size(); ++i)
      {
        if (!(diagonal[i] > 0.))
          throw NumericalError("PointJacobi: non-positive diagonal entry");
        inv_diag[i] = static_cast<Number>(1. / diagonal[i]);
      }
  }

  template <typename Number>
  void PointJacobi<Number>::apply_batch(std::size_t first, unsigned lanes, const VA *r, VA *z) const
  {
    for (std::size_t i = 0; i < npc; ++i)
      {
        VA d;
        for (int v = 0; v < VA::width; ++v)
          d[v] = v < int(lanes) ? inv_diag[(first + v) * npc + i] : Number(0);
        z[i] = r[i] * d;
      }
  }

  // ---------------------------------------------------------------------

  template <typename Number>
  TransformedDiagonal<Number>::TransformedDiagonal(const DenseMatrix &transformation,
                                                   const std::vector<double> &diagonal,
                                                   std::size_t n_elements)
    : n(static_cast<unsigned>(transformation.rows()))
    , npc(std::size_t(n) * n * n)
    , n_el(n_elements)
    , t(transformation)
  {
    if (transformation.cols() != n || diagonal.size() != npc * n_el)
      throw ParameterError("TransformedDiagonal: size mismatch");
    inv_diag.resize(diagonal.size());
    for (std::size_t i = 0; i < diagonal.size(); ++i)
      {
        if (!(diagonal[i] > 0.))
          throw NumericalError("TransformedDiagonal: non-positive diagonal entry");
        inv_diag[i] = static_cast<Number>(1. / diagonal[i]);
      }
  }

  template <typename Number>
  void TransformedDiagonal<Number>::apply_batch(std::size_t first, unsigned lanes, const VA *r, VA *z) const
  {
    auto &a = thread_buffer<VA>(0, npc);
    auto &b = thread_buffer<VA>(1, npc);
    const std::array<unsigned, 3> ext = {n, n, n};
    t.apply(r, a.data(), ext, 0, true);
    t.apply(a.data(), b.data(), ext, 1, true);
    t.apply(b.data(), a.data(), ext, 2, true);
    for (std::size_t i = 0; i < npc; ++i)
      {
        VA d;
        for (int v = 0; v < VA::width; ++v)
          d[v] = v < int(lanes) ? inv_diag[(first + v) * npc + i] : Number(0);
        a[i] = a[i] * d;
      }
    t.apply(a.data(), b.data(), ext, 0, false);
    t.apply(b.data(), a.data(), ext, 1, false);
    t.apply(a.data(), z, ext, 2, false);
  }

  template <typename Number>
  std::unique_ptr<TransformedDiagonal<Number>> make_transformed_gl(const SipOperator<Number> &op)
  {
    const Basis1D gl = build_basis(op.degree(), BasisKind::nodal_gauss_lobatto);
    const SipOperator<double> gl_op(gl, op.mesh(), op.options());
    return std::make_unique<TransformedDiagonal<Number>>(change_of_basis(op.basis(), gl),
                                                         gl_op.diagonal(),
                                                         op.n_elements());
  }

  // ---------------------------------------------------------------------

  FdmBlock fdm_setup(const Basis1D &basis, double h, double sigma)
  {
    if (!(h > 0.) || !(sigma > 0.))
      throw ParameterError("fdm_setup: need positive h and sigma");
    const std::size_t n = basis.size();
    FdmBlock block;
    block.mass = mass_matrix(basis.functions);
    for (auto &m : block.mass.values())
      m *= h;

    const QuadratureRule1D quad = gauss_rule(static_cast<unsigned>(n), QuadratureKind::gauss);
    DenseMatrix l(n, n);
    std::vector<double> v(n), d(n);
    for (std::size_t q = 0; q < quad.size(); ++q)
      {
        for (std::size_t i = 0; i < n; ++i)
          basis.functions[i].value_and_derivative(quad.points[q], v[i], d[i]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            l(i, j) += quad.weights[q] * d[i] * d[j] / h;
      }
    for (const double x : {0., 1.})
      {
        const double normal = x == 0. ? -1. : 1.;
        for (std::size_t i = 0; i < n; ++i)
          basis.functions[i].value_and_derivative(x, v[i], d[i]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            l(i, j) += sigma * v[i] * v[j] - 0.5 * v[i] * normal * d[j] / h -
                       0.5 * normal * d[i] / h * v[j];
      }
    block.laplace = l;
    SymmetricEigenpairs eig = generalized_symmetric_eigen(block.laplace, block.mass);
    block.eigenvectors = std::move(eig.vectors);
    block.eigenvalues = std::move(eig.values);
    return block;
  }

  DenseMatrix fdm_block_matrix(const std::array<FdmBlock, 3> &b)
  {
    const std::size_t n = b[0].mass.rows();
    const std::size_t npc = n * n * n;
    DenseMatrix a(npc, npc);
    for (std::size_t i2 = 0; i2 < n; ++i2)
      for (std::size_t i1 = 0; i1 < n; ++i1)
        for (std::size_t i0 = 0; i0 < n; ++i0)
          for (std::size_t j2 = 0; j2 < n; ++j2)
            for (std::size_t j1 = 0; j1 < n; ++j1)
              for (std::size_t j0 = 0; j0 < n; ++j0)
                {
                  const double m0 = b[0].mass(i0, j0), m1 = b[1].mass(i1, j1), m2 = b[2].mass(i2, j2);
                  a(i0 + n * (i1 + n * i2), j0 + n * (j1 + n * j2)) =
                    m2 * m1 * b[0].laplace(i0, j0) + m2 * b[1].laplace(i1, j1) * m0 +
                    b[2].laplace(i2, j2) * m1 * m0;
                }
    return a;
  }

  namespace
  {
    template <typename Number>
    std::array<FdmBlock, 3> fdm_blocks_for(const SipOperator<Number> &op)
    {
      if (!is_cartesian(op.mesh().jacobian()))
        throw ParameterError("FDM smoother needs an axis-aligned Cartesian mesh");
      std::array<FdmBlock, 3> blocks;
      for (unsigned k = 0; k < 3; ++k)
        blocks[k] = fdm_setup(op.basis(), op.mesh().jacobian()(k, k), op.penalty(k));
      return blocks;
    }
  } // namespace

  template <typename Number>
  FdmPreconditioner<Number>::FdmPreconditioner(const SipOperator<Number> &op)
    : FdmPreconditioner(fdm_blocks_for(op), op.n_elements())
  {
    if (op.options().boundary != BoundaryKind::dirichlet || op.options().cell_only)
      throw ParameterError("FDM smoother supports the full Dirichlet operator only");
  }

  template <typename Number>
  FdmPreconditioner<Number>::FdmPreconditioner(const std::array<FdmBlock, 3> &blocks,
                                               std::size_t n_elements)
    : blocks_(blocks)
    , n(static_cast<unsigned>(blocks[0].mass.rows()))
    , npc(std::size_t(n) * n * n)
    , n_el(n_elements)
  {
    for (unsigned k = 0; k < 3; ++k)
      t[k] = Kernel1D<Number>(blocks[k].eigenvectors);
    inv_lambda.resize(npc);
    for (unsigned i2 = 0; i2 < n; ++i2)
      for (unsigned i1 = 0; i1 < n; ++i1)
        for (unsigned i0 = 0; i0 < n; ++i0)
          {
            const double l = blocks[0].eigenvalues[i0] + blocks[1].eigenvalues[i1] + blocks[2].eigenvalues[i2];
            if (!(l > 0.))
              throw NumericalError("FdmPreconditioner: element block is not positive definite");
            inv_lambda[i0 + n * (i1 + n * i2)] = static_cast<Number>(1. / l);
          }
  }

  template <typename Number>
  void FdmPreconditioner<Number>::apply_batch(std::size_t, unsigned, const VA *r, VA *z) const
  {
    auto &a = thread_buffer<VA>(0, npc);
    auto &b = thread_buffer<VA>(1, npc);
    const std::array<unsigned, 3> ext = {n, n, n};
    t[0].apply(r, a.data(), ext, 0, true);
    t[1].apply(a.data(), b.data(), ext, 1, true);
    t[2].apply(b.data(), a.data(), ext, 2, true);
    for (std::size_t i = 0; i < npc; ++i)
      a[i] = a[i] * inv_lambda[i];
    t[0].apply(a.data(), b.data(), ext, 0, false);
    t[1].apply(b.data(), a.data(), ext, 1, false);
    t[2].apply(a.data(), z, ext, 2, false);
  }

  std::string_view to_string(SmootherKind kind)
  {
    switch (kind)
      {
        case SmootherKind::point_jacobi:
          return "point-jacobi";
        case SmootherKind::transformed_gl:
          return "transformed-gl";
        case SmootherKind::fdm:
          return "fdm";
      }
    return "unknown";
  }

  SmootherKind parse_smoother_kind(std::string_view name)
  {
    for (const auto k : {SmootherKind::point_jacobi, SmootherKind::transformed_gl, SmootherKind::fdm})
      if (name == to_string(k))
        return k;
    throw ParameterError("unknown smoother '" + std::string(name) +
                         "' (expected point-jacobi, transformed-gl or fdm)");
  }

  template <typename Number>
  std::unique_ptr<ElementPreconditioner<Number>> make_preconditioner(const SipOperator<Number> &op,
                                                                     SmootherKind kind)
  {
    switch (kind)
      {
        case SmootherKind::point_jacobi:
          return std::make_unique<PointJacobi<Number>>(op);
        case SmootherKind::transformed_gl:
          return make_transformed_gl(op);
        case SmootherKind::fdm:
          return std::make_unique<FdmPreconditioner<Number>>(op);
      }
    throw ParameterError("make_preconditioner: unknown smoother");
  }

  // ---------------------------------------------------------------------

  template <typename Number>
  double lanczos_lambda_max(std::size_t n,
                            const VectorFunction<Number> &apply_a,
                            const VectorFunction<Number> &apply_pinv,
                            unsigned iterations)
  {
    if (n == 0 || iterations == 0)
      throw ParameterError("lanczos_lambda_max: empty problem");
    std::vector<Number> v(n), z(n), v_old(n, Number(0)), w(n), zw(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = static_cast<Number>(-5.5 + double(i % 12));
    apply_pinv(z, v);
    double beta = std::sqrt(dot<Number>(v, z));
    if (!(beta > 0.))
      throw NumericalError("lanczos_lambda_max: preconditioner is not positive definite");
    for (std::size_t i = 0; i < n; ++i)
      {
        v[i] = static_cast<Number>(v[i] / beta);
        z[i] = static_cast<Number>(z[i] / beta);
      }

    std::vector<double> alpha, offdiag;
    beta = 0.;
    for (unsigned j = 0; j < iterations; ++j)
      {
        apply_a(w, z);
        const double a = dot<Number>(w, z);
        alpha.push_back(a);
        for (std::size_t i = 0; i < n; ++i)
          w[i] = static_cast<Number>(w[i] - a * v[i] - beta * v_old[i]);
        apply_pinv(zw, w);
        const double b2 = dot<Number>(w, zw);
        if (!std::isfinite(a) || !std::isfinite(b2))
          throw NumericalError("lanczos_lambda_max: non-finite values");
        if (j + 1 == iterations || b2 <= 1e-24 * a * a)
          break;
        beta = std::sqrt(b2);
        offdiag.push_back(beta);
        std::swap(v_old, v);
        for (std::size_t i = 0; i < n; ++i)
          {
            v[i] = static_cast<Number>(w[i] / beta);
            z[i] = static_cast<Number>(zw[i] / beta);
          }
      }

    const std::size_t m = alpha.size();
    DenseMatrix t(m, m);
    for (std::size_t i = 0; i < m; ++i)
      {
        t(i, i) = alpha[i];
        if (i + 1 < m)
          t(i, i + 1) = t(i + 1, i) = offdiag[i];
      }
    return symmetric_eigen(t).values.back();
  }

  namespace
  {
    double chebyshev_t(unsigned k, double x)
    {
      if (std::abs(x) <= 1.)
        return std::cos(k * std::acos(x));
      const double c = std::cosh(k * std::acosh(std::abs(x)));
      return x < 0. && k % 2 == 1 ? -c : c;
    }
  } // namespace

  double chebyshev_residual_polynomial(unsigned k, double lambda, double a, double b)
  {
    const double c = 0.5 * (a + b), delta = 0.5 * (b - a);
    return chebyshev_t(k, (c - lambda) / delta) / chebyshev_t(k, c / delta);
  }

  unsigned chebyshev_degree_for_reduction(double kappa, double reduction, unsigned max_degree)
  {
    if (!(kappa >= 1.) || !(reduction > 0.))
      throw ParameterError("chebyshev_degree_for_reduction: need kappa >= 1 and reduction > 0");
    const double r = (std::sqrt(kappa) - 1.) / (std::sqrt(kappa) + 1.);
    double bound = 2.;
    for (unsigned k = 1; k <= max_degree; ++k)
      {
        bound *= r;
        if (bound <= reduction)
          return k;
      }
    return max_degree;
  }

  // ---------------------------------------------------------------------

  template <typename Number>
  ChebyshevSmoother<Number>::ChebyshevSmoother(const SipOperator<Number> &op,
                                               const ElementPreconditioner<Number> &preconditioner,
                                               double lambda_max,
                                               const ChebyshevOptions &options)
    : op(op)
    , prec(preconditioner)
    , lambda_max_(lambda_max)
    , a_(options.lower_factor * lambda_max)
    , b_(options.upper_factor * lambda_max)
    , options_(options)
  {
    if (!(lambda_max > 0.) || !(options.lower_factor > 0.) || !(options.upper_factor > options.lower_factor))
      throw ParameterError("ChebyshevSmoother: invalid eigenvalue range");
    if (options.degree == 0)
      throw ParameterError("ChebyshevSmoother: degree must be at least 1");
    if (prec.dofs_per_cell() != op.dofs_per_cell() || prec.n_elements() != op.n_elements())
      throw ParameterError("ChebyshevSmoother: preconditioner does not match the operator");
  }

  template <typename Number>
  void chebyshev_iteration(const VectorFunction<Number> &apply_a,
                           const VectorFunction<Number> &apply_pinv,
                           std::span<Number> u,
                           std::span<const Number> b,
                           double lower,
                           double upper,
                           unsigned steps,
                           bool zero_initial)
  {
    const std::size_t n = u.size();
    if (b.size() != n)
      throw ParameterError("chebyshev_iteration: vector size mismatch");
    if (!(lower > 0.) || !(upper > lower))
      throw ParameterError("chebyshev_iteration: need 0 < lower < upper");
    if (steps == 0)
      return;
    const double theta = 0.5 * (upper + lower), delta = 0.5 * (upper - lower), sigma1 = theta / delta;
    std::vector<Number> prev(n, Number(0)), r(n), z(n);

    auto step = [&](double c1, double c2, bool skip_matvec) {
      if (skip_matvec)
        std::copy(b.begin(), b.end(), r.begin());
      else
        {
          apply_a(r, u);
          for (std::size_t i = 0; i < n; ++i)
            r[i] = b[i] - r[i];
        }
      apply_pinv(z, r);
      for (std::size_t i = 0; i < n; ++i)
        {
          const Number next = u[i] + Number(c1) * (u[i] - prev[i]) + Number(c2) * z[i];
          prev[i] = u[i];
          u[i] = next;
        }
    };

    if (zero_initial)
      std::fill(u.begin(), u.end(), Number(0));
    step(0., 1. / theta, zero_initial);
    double rho_old = 1. / sigma1;
    for (unsigned j = 1; j < steps; ++j)
      {
        const double rho = 1. / (2. * sigma1 - rho_old);
        step(rho * rho_old, 2. * rho / delta, false);
        rho_old = rho;
      }
  }

  template <typename Number>
  void ChebyshevSmoother<Number>::smooth(std::span<Number> u, std::span<const Number> b, bool zero_initial) const
  {
    smooth(u, b, zero_initial, options_.degree);
  }

  template <typename Number>
  void ChebyshevSmoother<Number>::smooth(std::span<Number> u,
                                         std::span<const Number> b,
                                         bool zero_initial,
                                         unsigned steps) const
  {
    using VA = Batch<Number>;
    constexpr int W = VA::width;
    const std::size_t n = op.n_dofs(), npc = op.dofs_per_cell(), n_el = op.n_elements();
    if (u.size() != n || b.size() != n)
      throw ParameterError("ChebyshevSmoother::smooth: vector size mismatch");
    if (steps == 0)
      return;
    work.resize(n);

    const double theta = 0.5 * (b_ + a_), delta = 0.5 * (b_ - a_), sigma1 = theta / delta;
    Number *cur = u.data(), *prev = work.data();
    const Number *rhs = b.data();
    const ElementPreconditioner<Number> &p = prec;

    // prev <- cur + c1 (cur - prev) + c2 P^{-1}(b - y) on one batch
    auto update = [&](std::size_t first, unsigned lanes, const VA *y, Number c1, Number c2) {
      auto &r = thread_buffer<VA>(2, npc);
      auto &z = thread_buffer<VA>(3, npc);
      for (std::size_t i = 0; i < npc; ++i)
        for (int v = 0; v < W; ++v)
          r[i][v] = v < int(lanes) ? rhs[(first + v) * npc + i] - (y ? y[i][v] : Number(0)) : Number(0);
      p.apply_batch(first, lanes, r.data(), z.data());
      for (unsigned v = 0; v < lanes; ++v)
        {
          const std::size_t o = (first + v) * npc;
          for (std::size_t i = 0; i < npc; ++i)
            prev[o + i] = cur[o + i] + c1 * (cur[o + i] - prev[o + i]) + c2 * z[i][v];
        }
    };

    auto step = [&](Number c1, Number c2) {
      if (options_.merged)
        op.loop(cur, [&](std::size_t first, unsigned lanes, const VA *y) { update(first, lanes, y, c1, c2); });
      else
        {
          tmp.resize(n);
          op.apply(std::span<const Number>(cur, n), std::span<Number>(tmp));
          const std::size_t n_batches = (n_el + W - 1) / W;
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel for schedule(static)
#endif
          for (std::size_t bt = 0; bt < n_batches; ++bt)
            {
              auto &y = thread_buffer<VA>(4, npc);
              const std::size_t first = bt * W;
              const unsigned lanes = static_cast<unsigned>(std::min<std::size_t>(W, n_el - first));
              gather_lanes(tmp.data(), first, lanes, npc, y.data());
              update(first, lanes, y.data(), c1, c2);
            }
        }
      std::swap(cur, prev);
    };

    double rho_old = 1. / sigma1;
    if (zero_initial)
      {
        // u_0 = 0, so the residual is b and u_1 = P^{-1} b / theta
        std::fill(u.begin(), u.end(), Number(0));
        std::fill(work.begin(), work.end(), Number(0));
        const std::size_t n_batches = (n_el + W - 1) / W;
        std::swap(cur, prev); // cur = work (zeros), prev = u
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel for schedule(static)
#endif
        for (std::size_t bt = 0; bt < n_batches; ++bt)
          {
            const std::size_t first = bt * W;
            const unsigned lanes = static_cast<unsigned>(std::min<std::size_t>(W, n_el - first));
            update(first, lanes, nullptr, Number(0), static_cast<Number>(1. / theta));
          }
        std::swap(cur, prev); // cur = u (u_1), prev = work (u_0 = 0)
      }
    else
      step(Number(0), static_cast<Number>(1. / theta));

    for (unsigned j = 1; j < steps; ++j)
      {
        const double rho = 1. / (2. * sigma1 - rho_old);
        step(static_cast<Number>(rho * rho_old), static_cast<Number>(2. * rho / delta));
        rho_old = rho;
      }
    if (cur != u.data())
      std::copy(work.begin(), work.end(), u.begin());
  }

  // ---------------------------------------------------------------------

  template <typename Number>
  DenseMatrix Transfer<Number>::embedding_matrix(const Basis1D &basis, unsigned child)
  {
    if (child > 1)
      throw ParameterError("Transfer::embedding_matrix: child must be 0 or 1");
    const std::size_t n = basis.size();
    const QuadratureRule1D quad = gauss_rule(static_cast<unsigned>(n + 1), QuadratureKind::gauss);
    DenseMatrix b(n, n);
    for (std::size_t q = 0; q < quad.size(); ++q)
      {
        const double x = quad.points[q], xc = 0.5 * (x + child);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            b(i, j) += quad.weights[q] * basis.functions[i].value(x) * basis.functions[j].value(xc);
      }
    return inverse(mass_matrix(basis.functions)) * b;
  }

  template <typename Number>
  Transfer<Number>::Transfer(const Basis1D &basis, const AffineHexMesh &coarse, const AffineHexMesh &fine)
    : coarse_mesh(&coarse)
    , fine_mesh(&fine)
    , n(static_cast<unsigned>(basis.size()))
    , npc(std::size_t(n) * n * n)
  {
    bool any = false;
    for (unsigned d = 0; d < 3; ++d)
      {
        const unsigned lc = coarse.levels()[d], lf = fine.levels()[d];
        if (lf != lc && lf != lc + 1)
          throw ParameterError("Transfer: fine mesh is not a refinement of the coarse mesh");
        refined[d] = lf == lc + 1;
        any = any || refined[d];
      }
    if (!any)
      throw ParameterError("Transfer: meshes are identical");
    for (unsigned c = 0; c < 2; ++c)
      embed[c] = Kernel1D<Number>(embedding_matrix(basis, c));
  }

  template <typename Number>
  void Transfer<Number>::prolongate(std::span<Number> fine, std::span<const Number> coarse) const
  {
    const std::size_t n_fine = fine_mesh->n_elements();
    if (fine.size() != npc * n_fine || coarse.size() != npc * coarse_mesh->n_elements())
      throw ParameterError("Transfer::prolongate: vector size mismatch");
    const std::array<unsigned, 3> ext = {n, n, n};
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel
#endif
    {
      std::vector<Number> buf[2] = {std::vector<Number>(npc), std::vector<Number>(npc)};
#ifdef DGMF_WITH_OPENMP
#  pragma omp for schedule(static)
#endif
      for (std::size_t e = 0; e < n_fine; ++e)
        {
          std::array<unsigned, 3> idx = fine_mesh->lattice(e), child = {0, 0, 0};
          for (unsigned d = 0; d < 3; ++d)
            if (refined[d])
              {
                child[d] = idx[d] & 1u;
                idx[d] >>= 1;
              }
          const Number *in = coarse.data() + coarse_mesh->element_at(idx) * npc;
          Number *out = fine.data() + e * npc;
          unsigned last = 0;
          for (unsigned d = 0; d < 3; ++d)
            if (refined[d])
              last = d;
          int b = 0;
          for (unsigned d = 0; d < 3; ++d)
            if (refined[d])
              {
                Number *dst = d == last ? out : buf[b].data();
                embed[child[d]].apply(in, dst, ext, d, false);
                in = dst;
                b ^= 1;
              }
        }
    }
  }

  template <typename Number>
  void Transfer<Number>::restrict(std::span<Number> coarse, std::span<const Number> fine) const
  {
    const std::size_t n_coarse = coarse_mesh->n_elements();
    if (fine.size() != npc * fine_mesh->n_elements() || coarse.size() != npc * n_coarse)
      throw ParameterError("Transfer::restrict: vector size mismatch");
    const std::array<unsigned, 3> ext = {n, n, n};
    unsigned dims[3], n_dims = 0;
    for (unsigned d = 0; d < 3; ++d)
      if (refined[d])
        dims[n_dims++] = d;
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel
#endif
    {
      std::vector<Number> buf[2] = {std::vector<Number>(npc), std::vector<Number>(npc)};
#ifdef DGMF_WITH_OPENMP
#  pragma omp for schedule(static)
#endif
      for (std::size_t e = 0; e < n_coarse; ++e)
        {
          Number *out = coarse.data() + e * npc;
          std::fill(out, out + npc, Number(0));
          const std::array<unsigned, 3> parent = coarse_mesh->lattice(e);
          for (unsigned c = 0; c < (1u << n_dims); ++c)
            {
              std::array<unsigned, 3> idx = parent;
              std::array<unsigned, 3> child = {0, 0, 0};
              for (unsigned t = 0; t < n_dims; ++t)
                {
                  child[dims[t]] = (c >> t) & 1u;
                  idx[dims[t]] = 2 * parent[dims[t]] + child[dims[t]];
                }
              const Number *in = fine.data() + fine_mesh->element_at(idx) * npc;
              int b = 0;
              for (unsigned t = 0; t < n_dims; ++t)
                {
                  const unsigned d = dims[t];
                  const bool last = t + 1 == n_dims;
                  Number *dst = last ? out : buf[b].data();
                  embed[child[d]].apply(in, dst, ext, d, true, last);
                  in = dst;
                  b ^= 1;
                }
            }
        }
    }
  }

  // ---------------------------------------------------------------------

  template <typename Number>
  MgHierarchy<Number>::MgHierarchy(const Basis1D &basis,
                                   const AffineHexMesh &fine,
                                   const MultigridOptions &options)
    : options_(options)
  {
    std::vector<AffineHexMesh> meshes = {fine};
    while (meshes.back().levels() != Levels{0, 0, 0})
      meshes.push_back(coarsen(meshes.back()));
    levels.resize(meshes.size());

    const double kappa = options.chebyshev.upper_factor / options.chebyshev.lower_factor;
    coarse_degree_ = chebyshev_degree_for_reduction(kappa, options.coarse_reduction, options.coarse_max_degree);

    for (std::size_t l = 0; l < levels.size(); ++l)
      {
        Level &level = levels[l];
        level.op = std::make_unique<SipOperator<Number>>(basis, meshes[meshes.size() - 1 - l],
                                                         options.operator_options);
        level.prec = make_preconditioner(*level.op, options.smoother);
        const SipOperator<Number> &op = *level.op;
        const ElementPreconditioner<Number> &prec = *level.prec;
        const double lmax = lanczos_lambda_max<Number>(
          op.n_dofs(),
          [&op](std::span<Number> dst, std::span<const Number> src) { op.apply(src, dst); },
          [&prec](std::span<Number> dst, std::span<const Number> src) { prec.vmult(dst, src); },
          options.lanczos_iterations);
        ChebyshevOptions cheb = options.chebyshev;
        if (l == 0)
          cheb.degree = coarse_degree_;
        level.smoother = std::make_unique<ChebyshevSmoother<Number>>(op, prec, lmax, cheb);

        const std::size_t n = op.n_dofs();
        if (l > 0)
          {
            level.transfer = std::make_unique<Transfer<Number>>(basis, levels[l - 1].op->mesh(), op.mesh());
            level.residual.resize(n);
            level.correction.resize(n);
            level.coarse_rhs.resize(levels[l - 1].op->n_dofs());
            level.coarse_sol.resize(levels[l - 1].op->n_dofs());
          }
      }
  }

  template <typename Number>
  void MgHierarchy<Number>::vcycle(std::span<Number> u, std::span<const Number> b) const
  {
    vcycle(levels.size() - 1, u, b);
  }

  template <typename Number>
  void MgHierarchy<Number>::vcycle(std::size_t l, std::span<Number> u, std::span<const Number> b) const
  {
    const Level &level = levels[l];
    level.smoother->smooth(u, b, true);
    if (l == 0)
      return;

    const std::size_t n = u.size();
    level.op->apply(std::span<const Number>(u), std::span<Number>(level.residual));
    for (std::size_t i = 0; i < n; ++i)
      level.residual[i] = b[i] - level.residual[i];
    level.transfer->restrict(level.coarse_rhs, level.residual);
    vcycle(l - 1, level.coarse_sol, level.coarse_rhs);
    level.transfer->prolongate(level.correction, level.coarse_sol);
    for (std::size_t i = 0; i < n; ++i)
      u[i] += level.correction[i];
    level.smoother->smooth(u, b, false);
  }

  // ---------------------------------------------------------------------

  SolveResult pcg_solve(const VectorFunction<double> &apply_a,
                        const VectorFunction<double> &apply_precond,
                        std::span<const double> b,
                        double rel_tol,
                        unsigned max_iterations)
  {
    const std::size_t n = b.size();
    SolveResult result;
    result.solution.assign(n, 0.);
    const double norm_b = std::sqrt(dot<double>(b, b));
    result.initial_residual = norm_b;
    result.residual_history.push_back(norm_b);
    if (norm_b == 0.)
      return result;
    if (!std::isfinite(norm_b))
      throw NumericalError("pcg_solve: right-hand side is not finite");

    std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
    std::vector<double> &x = result.solution;
    apply_precond(z, r);
    p = z;
    double rz = dot<double>(r, z);
    double res = norm_b;
    for (unsigned it = 1; it <= max_iterations; ++it)
      {
        apply_a(q, p);
        const double pq = dot<double>(p, q);
        if (!(pq > 0.))
          throw NumericalError("pcg_solve: operator is not positive definite (p^T A p <= 0)");
        const double alpha = rz / pq;
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel for schedule(static)
#endif
        for (std::size_t i = 0; i < n; ++i)
          {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
          }
        res = std::sqrt(dot<double>(r, r));
        result.residual_history.push_back(res);
        if (!std::isfinite(res))
          throw NumericalError("pcg_solve: residual is not finite after " + std::to_string(it) +
                               " iterations");
        if (res <= rel_tol * norm_b)
          {
            result.iterations = it;
            result.final_residual = res;
            result.rate = std::pow(res / norm_b, 1. / it);
            return result;
          }
        apply_precond(z, r);
        const double rz_new = dot<double>(r, z);
        if (!(rz_new > 0.))
          throw NumericalError("pcg_solve: preconditioner is not positive definite");
        const double beta = rz_new / rz;
        rz = rz_new;
#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel for schedule(static)
#endif
        for (std::size_t i = 0; i < n; ++i)
          p[i] = z[i] + beta * p[i];
      }
    std::ostringstream msg;
    msg << "pcg_solve: no convergence in " << max_iterations << " iterations, relative residual "
        << res / norm_b << " (target " << rel_tol << ")";
    throw NumericalError(msg.str());
  }

  template <typename Number>
  VectorFunction<double> vcycle_preconditioner(const MgHierarchy<Number> &mg)
  {
    if constexpr (std::is_same_v<Number, double>)
      return [&mg](std::span<double> dst, std::span<const double> src) { mg.vcycle(dst, src); };
    else
      {
        const std::size_t n = mg.op(mg.n_levels() - 1).n_dofs();
        auto in = std::make_shared<std::vector<Number>>(n);
        auto out = std::make_shared<std::vector<Number>>(n);
        return [&mg, in, out](std::span<double> dst, std::span<const double> src) {
          for (std::size_t i = 0; i < src.size(); ++i)
            (*in)[i] = static_cast<Number>(src[i]);
          mg.vcycle(*out, *in);
          for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = (*out)[i];
        };
      }
  }

#define DGMF_INSTANTIATE(Number)                                                                             \
  template class ElementPreconditioner<Number>;                                                              \
  template class PointJacobi<Number>;                                                                        \
  template class TransformedDiagonal<Number>;                                                                \
  template class FdmPreconditioner<Number>;                                                                  \
  template std::unique_ptr<TransformedDiagonal<Number>> make_transformed_gl(const SipOperator<Number> &);     \
  template std::unique_ptr<ElementPreconditioner<Number>> make_preconditioner(const SipOperator<Number> &,   \
                                                                              SmootherKind);                 \
  template double lanczos_lambda_max<Number>(std::size_t,                                                    \
                                             const VectorFunction<Number> &,                                 \
                                             const VectorFunction<Number> &,                                 \
                                             unsigned);                                                      \
  template void chebyshev_iteration<Number>(const VectorFunction<Number> &,                                    \
                                            const VectorFunction<Number> &,                                    \
                                            std::span<Number>,                                                 \
                                            std::span<const Number>,                                           \
                                            double,                                                            \
                                            double,                                                            \
                                            unsigned,                                                          \
                                            bool);                                                             \
  template class ChebyshevSmoother<Number>;                                                                  \
  template class Transfer<Number>;                                                                           \
  template class MgHierarchy<Number>;                                                                        \
  template VectorFunction<double> vcycle_preconditioner(const MgHierarchy<Number> &);

  DGMF_INSTANTIATE(double)
  DGMF_INSTANTIATE(float)
#undef DGMF_INSTANTIATE
} // namespace dgmf
