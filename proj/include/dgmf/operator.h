#pragma once

#include <dgmf/mesh.h>
#include <dgmf/polybasis.h>
#include <dgmf/tensor.h>
#include <dgmf/vectorization.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <unordered_set>
#include <vector>

#ifdef DGMF_WITH_OPENMP
#  include <omp.h>
#endif

namespace dgmf
{
  enum class BoundaryKind
  {
    /// u+ = -u-, grad u+ = grad u-: homogeneous Dirichlet
    dirichlet,
    /// u+ = u-, grad u+ = -grad u-: all boundary terms vanish
    neumann
  };

  struct OperatorOptions
  {
    /// Gauss points per direction, 0 means p+1.
    unsigned n_q = 0;
    BoundaryKind boundary = BoundaryKind::dirichlet;
    /// Skip all face integrals (cell term only).
    bool cell_only = false;
    EvenOdd even_odd = EvenOdd::automatic;
  };

  /// Number of threads used by the element loops.
  int n_threads();
  void set_n_threads(int n);

  /**
   * Matrix-free symmetric interior penalty discretization of -Laplace on an
   * affine hexahedral mesh. Degrees of freedom are stored element by element
   * in Morton order, (p+1)^3 per element.
   *
   * The element loop processes batches of W elements whose data is
   * interleaved in VectorizedArray lanes. Every element computes its cell
   * integral and all six face integrals, reading the neighbors only through
   * the coefficient layers that have a nonzero face value or derivative, and
   * writes its result once.
   */
  template <typename Number>
  class SipOperator
  {
  public:
    using value_type = Number;
    using VA = Batch<Number>;
    static constexpr int W = VA::width;

    SipOperator() = default;
    SipOperator(const Basis1D &basis, const AffineHexMesh &mesh, const OperatorOptions &options = {});

    const Basis1D &basis() const { return basis_; }
    const AffineHexMesh &mesh() const { return mesh_; }
    const MetricTerms &metric() const { return metric_; }
    const BasisMatrices &basis_matrices() const { return bm_; }
    const QuadratureRule1D &quadrature() const { return quad_; }
    const ShapeKernels<Number> &kernels() const { return sk_; }
    const OperatorOptions &options() const { return options_; }
    unsigned degree() const { return basis_.degree; }

    std::size_t dofs_per_cell() const { return npc_; }
    std::size_t n_elements() const { return mesh_.n_elements(); }
    std::size_t n_dofs() const { return npc_ * mesh_.n_elements(); }
    double penalty(unsigned k) const { return penalty_[k]; }

    /// dst = A src
    void apply(std::span<const Number> src, std::span<Number> dst) const;
    std::vector<Number> apply(const std::vector<Number> &src) const;

    /**
     * Element loop with a custom final step: for each batch of elements,
     * finish(first_element, n_lanes, y) is called with y holding the
     * dofs_per_cell() interleaved results (A src restricted to the batch).
     * Batches are disjoint; finish may write the batch's own vector ranges.
     */
    template <typename Finish>
    void loop(const Number *src, Finish &&finish) const;

    /// Number of distinct entries of the input vector read while computing
    /// the result of one element.
    std::size_t distinct_reads(std::size_t element) const;

    /// Diagonal of the matrix, computed element by element.
    std::vector<Number> diagonal() const;

    /// Diagonal entries of one element with the given boundary faces
    /// (bit f set for face f at the boundary).
    const std::vector<double> &diagonal_block(unsigned boundary_signature) const;

    unsigned boundary_signature(std::size_t element) const
    {
      unsigned s = 0;
      for (unsigned f = 0; f < 6; ++f)
        if (mesh_.at_boundary(element, f))
          s |= 1u << f;
      return s;
    }

  private:
    struct Scratch
    {
      std::vector<VA> u, y, nb, values, tmp, grad, fm, fp, gm, gp, ftmp;
    };

    Scratch make_scratch() const;

    /// Fills the neighbor layers needed for face @p face of the batch.
    template <typename Reader>
    void gather_neighbor(const Reader &reader,
                         const std::int64_t *elements,
                         unsigned face,
                         VA *nb,
                         VA &mask,
                         bool &any_interior,
                         bool &any_boundary) const;

    /**
     * Integrals of the elements in @p elements (-1 marks unused lanes)
     * with the own coefficients already in s.u. Neighbors are gathered
     * through @p reader unless @p zero_neighbors, in which case interior
     * faces see u+ = 0.
     */
    template <typename Reader>
    void integrate_batch(const Reader &reader,
                         const std::int64_t *elements,
                         bool zero_neighbors,
                         Scratch &s) const;

    template <typename Reader>
    void gather_own(const Reader &reader, const std::int64_t *elements, VA *u) const;

    Basis1D basis_;
    AffineHexMesh mesh_;
    MetricTerms metric_;
    QuadratureRule1D quad_;
    BasisMatrices bm_;
    ShapeKernels<Number> sk_;
    OperatorOptions options_;
    std::size_t npc_ = 0;
    std::array<double, 3> penalty_ = {};

    // cell: w_q and the merged metric; faces: w_q * surface factor and J^{-1} n
    std::vector<Number> cell_weight_;
    Number merged_[3][3] = {};
    std::vector<Number> face_weight_[3];
    Number normal_ref_[3][3] = {};

    mutable std::map<unsigned, std::vector<double>> diagonal_cache_;
  };

  /// Dense matrix of the operator, column j = A e_j. Refuses more than
  /// 20000 unknowns.
  template <typename Number>
  DenseMatrix assemble_dense(const SipOperator<Number> &op);

  // ---------------------------------------------------------------------
  // manufactured solution and error norms
  // ---------------------------------------------------------------------

  /// sin(3 pi x) sin(3 pi y) sin(3 pi z)
  double exact_solution(double x, double y, double z);
  /// -Laplace of exact_solution: 27 pi^2 sin(3 pi x) sin(3 pi y) sin(3 pi z).
  double manufactured_forcing(double x, double y, double z);

  using ScalarFunction = std::function<double(const std::array<double, 3> &)>;

  /// b_i = int phi_i f dx with the operator's quadrature.
  std::vector<double> assemble_rhs(const Basis1D &basis,
                                   const AffineHexMesh &mesh,
                                   unsigned n_q,
                                   const ScalarFunction &f);

  template <typename Number>
  std::vector<double> manufactured_rhs(const SipOperator<Number> &op)
  {
    return assemble_rhs(op.basis(), op.mesh(), op.quadrature().size(), [](const auto &x) {
      return manufactured_forcing(x[0], x[1], x[2]);
    });
  }

  /// L2 error against @p exact with p+2 Gauss points per direction.
  double l2_error(const Basis1D &basis,
                  const AffineHexMesh &mesh,
                  std::span<const double> u,
                  const ScalarFunction &exact);

  template <typename Number>
  double l2_error(const SipOperator<Number> &op, std::span<const double> u)
  {
    return l2_error(op.basis(), op.mesh(), u, [](const auto &x) {
      return exact_solution(x[0], x[1], x[2]);
    });
  }

  /// Element-wise L2 projection of f (exact for polynomials of degree <= p
  /// in each reference coordinate).
  std::vector<double> project(const Basis1D &basis,
                              const AffineHexMesh &mesh,
                              const ScalarFunction &f);

  // ---------------------------------------------------------------------
  // implementation
  // ---------------------------------------------------------------------

  template <typename Number>
  SipOperator<Number>::SipOperator(const Basis1D &basis,
                                   const AffineHexMesh &mesh,
                                   const OperatorOptions &options)
    : basis_(basis)
    , mesh_(mesh)
    , metric_(metric_terms(mesh))
    , options_(options)
  {
    const unsigned p = basis.degree;
    const unsigned nq = options.n_q == 0 ? p + 1 : options.n_q;
    if (nq < p + 1)
      throw ParameterError("SipOperator: need at least p+1 quadrature points");
    options_.n_q = nq;
    quad_ = gauss_rule(nq, QuadratureKind::gauss);
    bm_ = dgmf::basis_matrices(basis, quad_);
    sk_ = ShapeKernels<Number>(bm_, 3, options.even_odd);
    npc_ = sk_.dofs_per_cell();

    for (unsigned k = 0; k < 3; ++k)
      penalty_[k] = double(p + 1) * double(p + 1) / metric_.h_normal[k];

    cell_weight_.resize(sk_.points_per_cell());
    for (unsigned k = 0, q = 0; k < nq; ++k)
      for (unsigned j = 0; j < nq; ++j)
        for (unsigned i = 0; i < nq; ++i, ++q)
          cell_weight_[q] =
            static_cast<Number>(quad_.weights[i] * quad_.weights[j] * quad_.weights[k]);
    for (unsigned a = 0; a < 3; ++a)
      for (unsigned b = 0; b < 3; ++b)
        merged_[a][b] = static_cast<Number>(metric_.merged_cell(a, b));
    for (unsigned k = 0; k < 3; ++k)
      {
        face_weight_[k].resize(sk_.points_per_face());
        for (unsigned j = 0, q = 0; j < nq; ++j)
          for (unsigned i = 0; i < nq; ++i, ++q)
            face_weight_[k][q] =
              static_cast<Number>(quad_.weights[i] * quad_.weights[j] * metric_.face_jxw[k]);
        for (unsigned d = 0; d < 3; ++d)
          normal_ref_[k][d] = static_cast<Number>(metric_.normal_ref[k][d]);
      }
  }

  template <typename Number>
  typename SipOperator<Number>::Scratch SipOperator<Number>::make_scratch() const
  {
    Scratch s;
    const std::size_t buf = sk_.buffer_size();
    const std::size_t fbuf = std::max<std::size_t>(sk_.points_per_face(), std::size_t(sk_.n) * sk_.n);
    s.u.resize(npc_);
    s.y.resize(npc_);
    s.nb.resize(npc_);
    s.values.resize(buf);
    s.tmp.resize(buf);
    s.grad.resize(3 * sk_.points_per_cell());
    s.fm.resize(fbuf);
    s.fp.resize(fbuf);
    s.gm.resize(3 * fbuf);
    s.gp.resize(3 * fbuf);
    s.ftmp.resize(3 * fbuf);
    return s;
  }

  template <typename Number>
  template <typename Reader>
  void SipOperator<Number>::gather_own(const Reader &reader,
                                       const std::int64_t *elements,
                                       VA *u) const
  {
    for (int v = 0; v < W; ++v)
      {
        if (elements[v] < 0)
          {
            for (std::size_t i = 0; i < npc_; ++i)
              u[i][v] = Number(0);
            continue;
          }
        const std::size_t offset = static_cast<std::size_t>(elements[v]) * npc_;
        for (std::size_t i = 0; i < npc_; ++i)
          u[i][v] = reader(offset + i);
      }
  }

  template <typename Number>
  template <typename Reader>
  void SipOperator<Number>::gather_neighbor(const Reader &reader,
                                            const std::int64_t *elements,
                                            unsigned face,
                                            VA *nb,
                                            VA &mask,
                                            bool &any_interior,
                                            bool &any_boundary) const
  {
    const unsigned k = face / 2;
    const unsigned nside = 1 - face % 2;
    const std::vector<unsigned> &layers = sk_.layers[nside];
    const unsigned *off = sk_.tangential_offset[k].data();
    const std::size_t nt = sk_.tangential_offset[k].size();
    const std::size_t stride = ShapeKernels<Number>::ipow(sk_.n, k);
    any_interior = false;
    any_boundary = false;
    for (int v = 0; v < W; ++v)
      {
        const std::int64_t nbe = elements[v] < 0 ? -1 : mesh_.neighbor(elements[v], face);
        mask[v] = nbe < 0 ? Number(1) : Number(0);
        if (elements[v] >= 0)
          (nbe < 0 ? any_boundary : any_interior) = true;
        if (nbe < 0)
          {
            for (const unsigned j : layers)
              for (std::size_t t = 0; t < nt; ++t)
                nb[off[t] + j * stride][v] = Number(0);
            continue;
          }
        const std::size_t offset = static_cast<std::size_t>(nbe) * npc_;
        for (const unsigned j : layers)
          for (std::size_t t = 0; t < nt; ++t)
            {
              const std::size_t idx = off[t] + j * stride;
              nb[idx][v] = reader(offset + idx);
            }
      }
  }

  template <typename Number>
  template <typename Reader>
  void SipOperator<Number>::integrate_batch(const Reader &reader,
                                            const std::int64_t *elements,
                                            bool zero_neighbors,
                                            Scratch &s) const
  {
    const std::size_t npq = sk_.points_per_cell();
    VA *grad[3] = {s.grad.data(), s.grad.data() + npq, s.grad.data() + 2 * npq};

    // cell term
    cell_interpolate(sk_, s.u.data(), s.values.data(), s.tmp.data());
    cell_gradients_from_values(sk_, s.values.data(), grad);
    for (std::size_t q = 0; q < npq; ++q)
      {
        const VA g0 = grad[0][q], g1 = grad[1][q], g2 = grad[2][q];
        const Number w = cell_weight_[q];
        grad[0][q] = w * (merged_[0][0] * g0 + merged_[0][1] * g1 + merged_[0][2] * g2);
        grad[1][q] = w * (merged_[1][0] * g0 + merged_[1][1] * g1 + merged_[1][2] * g2);
        grad[2][q] = w * (merged_[2][0] * g0 + merged_[2][1] * g1 + merged_[2][2] * g2);
      }
    for (std::size_t q = 0; q < npq; ++q)
      s.values[q] = Number(0);
    cell_add_gradient_transpose(sk_, grad, s.values.data());
    cell_integrate(sk_, s.values.data(), s.tmp.data(), s.y.data(), false);

    if (options_.cell_only)
      return;

    const std::size_t nfq = sk_.points_per_face();
    const std::size_t fbuf = s.fm.size();
    VA *gm[3] = {s.gm.data(), s.gm.data() + fbuf, s.gm.data() + 2 * fbuf};
    VA *gp[3] = {s.gp.data(), s.gp.data() + fbuf, s.gp.data() + 2 * fbuf};
    const bool dirichlet = options_.boundary == BoundaryKind::dirichlet;

    for (unsigned face = 0; face < 6; ++face)
      {
        const unsigned k = face / 2;
        const Number sign = face % 2 ? Number(1) : Number(-1);
        const Number a[3] = {sign * normal_ref_[k][0], sign * normal_ref_[k][1], sign * normal_ref_[k][2]};
        const Number sigma = static_cast<Number>(penalty_[k]);
        const Number *fw = face_weight_[k].data();

        VA mask;
        bool any_interior = false, any_boundary = false;
        if (zero_neighbors)
          {
            for (int v = 0; v < W; ++v)
              {
                const bool boundary = elements[v] < 0 || mesh_.at_boundary(elements[v], face);
                mask[v] = boundary ? Number(1) : Number(0);
                (boundary ? any_boundary : any_interior) = true;
              }
          }
        else
          gather_neighbor(reader, elements, face, s.nb.data(), mask, any_interior, any_boundary);

        face_interpolate(sk_, face, s.u.data(), s.fm.data(), gm, s.ftmp.data());
        if (any_interior && !zero_neighbors)
          face_interpolate(sk_, face ^ 1u, s.nb.data(), s.fp.data(), gp, s.ftmp.data());
        else
          for (std::size_t q = 0; q < nfq; ++q)
            {
              s.fp[q] = Number(0);
              gp[0][q] = gp[1][q] = gp[2][q] = Number(0);
            }

        if (any_boundary)
          {
            // mirror values in boundary lanes
            const VA keep = Number(1) - mask;
            const Number vs = dirichlet ? Number(-1) : Number(1);
            const Number gs = dirichlet ? Number(1) : Number(-1);
            const VA vmask = vs * mask, gmask = gs * mask;
            for (std::size_t q = 0; q < nfq; ++q)
              {
                s.fp[q] = keep * s.fp[q] + vmask * s.fm[q];
                for (unsigned d = 0; d < 3; ++d)
                  gp[d][q] = keep * gp[d][q] + gmask * gm[d][q];
              }
          }

        for (std::size_t q = 0; q < nfq; ++q)
          {
            const VA jump = s.fm[q] - s.fp[q];
            const VA avg_dn = Number(0.5) * (a[0] * (gm[0][q] + gp[0][q]) +
                                             a[1] * (gm[1][q] + gp[1][q]) +
                                             a[2] * (gm[2][q] + gp[2][q]));
            s.fm[q] = (sigma * jump - avg_dn) * fw[q];
            const VA t = Number(-0.5) * fw[q] * jump;
            gm[0][q] = a[0] * t;
            gm[1][q] = a[1] * t;
            gm[2][q] = a[2] * t;
          }
        face_integrate(sk_, face, s.fm.data(), gm, s.ftmp.data(), s.y.data());
      }
  }

  template <typename Number>
  template <typename Finish>
  void SipOperator<Number>::loop(const Number *src, Finish &&finish) const
  {
    const std::size_t n_el = mesh_.n_elements();
    const std::size_t n_batches = (n_el + W - 1) / W;
    auto reader = [src](std::size_t i) { return src[i]; };

#ifdef DGMF_WITH_OPENMP
#  pragma omp parallel
#endif
    {
      Scratch s = make_scratch();
#ifdef DGMF_WITH_OPENMP
#  pragma omp for schedule(static)
#endif
      for (std::size_t b = 0; b < n_batches; ++b)
        {
          std::int64_t elements[W];
          const std::size_t first = b * W;
          const unsigned lanes = static_cast<unsigned>(std::min<std::size_t>(W, n_el - first));
          for (int v = 0; v < W; ++v)
            elements[v] = v < int(lanes) ? static_cast<std::int64_t>(first + v) : -1;
          gather_own(reader, elements, s.u.data());
          integrate_batch(reader, elements, false, s);
          finish(first, lanes, static_cast<const VA *>(s.y.data()));
        }
    }
  }

  template <typename Number>
  void SipOperator<Number>::apply(std::span<const Number> src, std::span<Number> dst) const
  {
    if (src.size() != n_dofs() || dst.size() != n_dofs())
      throw ParameterError("SipOperator::apply: vector size mismatch");
    Number *out = dst.data();
    const std::size_t npc = npc_;
    loop(src.data(), [out, npc](std::size_t first, unsigned lanes, const VA *y) {
      for (unsigned v = 0; v < lanes; ++v)
        {
          Number *o = out + (first + v) * npc;
          for (std::size_t i = 0; i < npc; ++i)
            o[i] = y[i][v];
        }
    });
  }

  template <typename Number>
  std::vector<Number> SipOperator<Number>::apply(const std::vector<Number> &src) const
  {
    std::vector<Number> dst(n_dofs());
    apply(std::span<const Number>(src), std::span<Number>(dst));
    return dst;
  }

  template <typename Number>
  std::size_t SipOperator<Number>::distinct_reads(std::size_t element) const
  {
    std::unordered_set<std::size_t> touched;
    const std::vector<Number> zeros(n_dofs(), Number(0));
    auto reader = [&](std::size_t i) {
      touched.insert(i);
      return zeros[i];
    };
    std::int64_t elements[W];
    for (int v = 0; v < W; ++v)
      elements[v] = v == 0 ? static_cast<std::int64_t>(element) : -1;
    Scratch s = make_scratch();
    gather_own(reader, elements, s.u.data());
    integrate_batch(reader, elements, false, s);
    return touched.size();
  }

  template <typename Number>
  const std::vector<double> &SipOperator<Number>::diagonal_block(unsigned signature) const
  {
    auto it = diagonal_cache_.find(signature);
    if (it != diagonal_cache_.end())
      return it->second;

    // a proxy element with the requested boundary faces
    std::int64_t proxy = -1;
    for (std::size_t e = 0; e < n_elements() && proxy < 0; ++e)
      if (boundary_signature(e) == signature)
        proxy = static_cast<std::int64_t>(e);
    if (proxy < 0)
      throw ParameterError("diagonal_block: no element with this boundary signature");

    std::vector<double> block(npc_);
    Scratch s = make_scratch();
    auto no_reader = [](std::size_t) { return Number(0); };
    std::int64_t elements[W];
    for (int v = 0; v < W; ++v)
      elements[v] = proxy;
    for (std::size_t i0 = 0; i0 < npc_; i0 += W)
      {
        for (std::size_t i = 0; i < npc_; ++i)
          for (int v = 0; v < W; ++v)
            s.u[i][v] = (i == i0 + v) ? Number(1) : Number(0);
        integrate_batch(no_reader, elements, true, s);
        for (int v = 0; v < W && i0 + v < npc_; ++v)
          block[i0 + v] = static_cast<double>(s.y[i0 + v][v]);
      }
    return diagonal_cache_.emplace(signature, std::move(block)).first->second;
  }

  template <typename Number>
  std::vector<Number> SipOperator<Number>::diagonal() const
  {
    std::vector<Number> d(n_dofs());
    for (std::size_t e = 0; e < n_elements(); ++e)
      {
        const std::vector<double> &block = diagonal_block(boundary_signature(e));
        for (std::size_t i = 0; i < npc_; ++i)
          d[e * npc_ + i] = static_cast<Number>(block[i]);
      }
    return d;
  }

  template <typename Number>
  DenseMatrix assemble_dense(const SipOperator<Number> &op)
  {
    const std::size_t n = op.n_dofs();
    if (n > 20000)
      throw ParameterError("assemble_dense: refusing to assemble more than 20000 unknowns");
    DenseMatrix a(n, n);
    std::vector<Number> e(n, Number(0)), col(n);
    for (std::size_t j = 0; j < n; ++j)
      {
        e[j] = Number(1);
        op.apply(std::span<const Number>(e), std::span<Number>(col));
        e[j] = Number(0);
        for (std::size_t i = 0; i < n; ++i)
          a(i, j) = static_cast<double>(col[i]);
      }
    return a;
  }
} // namespace dgmf
