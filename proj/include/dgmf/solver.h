#pragma once

#include <dgmf/operator.h>

#include <functional>
#include <memory>
#include <string_view>

namespace dgmf
{
  /**
   * Preconditioner acting element by element. Works on batches of
   * consecutive elements with interleaved lanes, so it can be fused into the
   * operator's element loop.
   */
  template <typename Number>
  class ElementPreconditioner
  {
  public:
    using VA = Batch<Number>;
    static constexpr int W = VA::width;

    virtual ~ElementPreconditioner() = default;

    /// z = P^{-1} r for the elements first, .., first + lanes - 1.
    virtual void apply_batch(std::size_t first, unsigned lanes, const VA *r, VA *z) const = 0;

    virtual std::size_t dofs_per_cell() const = 0;
    virtual std::size_t n_elements() const = 0;

    /// dst = P^{-1} src on the full vector.
    void vmult(std::span<Number> dst, std::span<const Number> src) const;
  };

  /// P = diag(A)
  template <typename Number>
  class PointJacobi : public ElementPreconditioner<Number>
  {
  public:
    using VA = Batch<Number>;

    explicit PointJacobi(const SipOperator<Number> &op);
    /// P^{-1} = diag(1/d)
    PointJacobi(std::vector<double> diagonal, std::size_t dofs_per_cell);

    void apply_batch(std::size_t first, unsigned lanes, const VA *r, VA *z) const override;
    std::size_t dofs_per_cell() const override { return npc; }
    std::size_t n_elements() const override { return inv_diag.size() / npc; }

  private:
    std::size_t npc;
    std::vector<Number> inv_diag;
  };

  /**
   * P^{-1} = (T x T x T) diag(d)^{-1} (T^T x T^T x T^T) element by element,
   * i.e. a diagonal preconditioner in the basis whose coefficients v relate
   * to ours by u = (T x T x T) v.
   */
  template <typename Number>
  class TransformedDiagonal : public ElementPreconditioner<Number>
  {
  public:
    using VA = Batch<Number>;

    TransformedDiagonal(const DenseMatrix &transformation,
                        const std::vector<double> &diagonal,
                        std::size_t n_elements);

    void apply_batch(std::size_t first, unsigned lanes, const VA *r, VA *z) const override;
    std::size_t dofs_per_cell() const override { return npc; }
    std::size_t n_elements() const override { return n_el; }

  private:
    unsigned n;
    std::size_t npc, n_el;
    Kernel1D<Number> t;
    std::vector<Number> inv_diag;
  };

  /// Hermite-like operator preconditioned by the diagonal of the nodal
  /// Gauss-Lobatto operator on the same mesh, transformed between the bases.
  template <typename Number>
  std::unique_ptr<TransformedDiagonal<Number>> make_transformed_gl(const SipOperator<Number> &op);

  /**
   * 1D ingredients of the fast diagonalization method: the interior-element
   * SIP matrix L and mass matrix M of an interval of length h, and the
   * generalized eigenvectors T with T^T M T = I, T^T L T = diag(lambda).
   */
  struct FdmBlock
  {
    DenseMatrix mass;
    DenseMatrix laplace;
    DenseMatrix eigenvectors;
    std::vector<double> eigenvalues;
  };

  FdmBlock fdm_setup(const Basis1D &basis, double h, double sigma);

  /// Element block A_K = M2 x M1 x L0 + M2 x L1 x M0 + L2 x M1 x M0 of an
  /// interior Cartesian element (dense, for verification).
  DenseMatrix fdm_block_matrix(const std::array<FdmBlock, 3> &blocks);

  /// Exact inverse of the interior-element block of a Cartesian mesh, used
  /// on all elements.
  template <typename Number>
  class FdmPreconditioner : public ElementPreconditioner<Number>
  {
  public:
    using VA = Batch<Number>;

    explicit FdmPreconditioner(const SipOperator<Number> &op);
    FdmPreconditioner(const std::array<FdmBlock, 3> &blocks, std::size_t n_elements);

    void apply_batch(std::size_t first, unsigned lanes, const VA *r, VA *z) const override;
    std::size_t dofs_per_cell() const override { return npc; }
    std::size_t n_elements() const override { return n_el; }

    const std::array<FdmBlock, 3> &blocks() const { return blocks_; }

  private:
    std::array<FdmBlock, 3> blocks_;
    unsigned n;
    std::size_t npc, n_el;
    Kernel1D<Number> t[3];
    std::vector<Number> inv_lambda;
  };

  enum class SmootherKind
  {
    point_jacobi,
    transformed_gl,
    fdm
  };

  std::string_view to_string(SmootherKind kind);
  /// Accepts "point-jacobi", "transformed-gl" and "fdm".
  SmootherKind parse_smoother_kind(std::string_view name);

  template <typename Number>
  std::unique_ptr<ElementPreconditioner<Number>> make_preconditioner(const SipOperator<Number> &op,
                                                                     SmootherKind kind);

  // ---------------------------------------------------------------------
  // eigenvalue estimate and Chebyshev iteration
  // ---------------------------------------------------------------------

  template <typename Number>
  using VectorFunction = std::function<void(std::span<Number>, std::span<const Number>)>;

  /**
   * Largest eigenvalue of P^{-1} A from a Lanczos iteration on A P^{-1} in
   * the P^{-1} inner product. The start vector repeats -5.5, -4.5, .., 5.5.
   * Returns the largest Ritz value, also on early breakdown.
   */
  template <typename Number>
  double lanczos_lambda_max(std::size_t n,
                            const VectorFunction<Number> &apply_a,
                            const VectorFunction<Number> &apply_pinv,
                            unsigned iterations = 15);

  /// Value of the residual polynomial q_k(lambda) of k Chebyshev steps on
  /// [a,b], from the closed form of the Chebyshev polynomials.
  double chebyshev_residual_polynomial(unsigned k, double lambda, double a, double b);

  /// Smallest degree k with 2((sqrt(kappa)-1)/(sqrt(kappa)+1))^k <= reduction.
  unsigned chebyshev_degree_for_reduction(double kappa, double reduction, unsigned max_degree = 200);

  /**
   * Chebyshev iteration on [lower, upper] for general operators given as
   * functions, same recurrence as ChebyshevSmoother.
   */
  template <typename Number>
  void chebyshev_iteration(const VectorFunction<Number> &apply_a,
                           const VectorFunction<Number> &apply_pinv,
                           std::span<Number> u,
                           std::span<const Number> b,
                           double lower,
                           double upper,
                           unsigned steps,
                           bool zero_initial);

  struct ChebyshevOptions
  {
    unsigned degree = 5;
    double lower_factor = 0.06;
    double upper_factor = 1.2;
    bool merged = true;
  };

  /**
   * Chebyshev iteration on [lower_factor, upper_factor] * lambda_max with
   * an element-wise inner preconditioner. The merged variant applies the
   * residual, preconditioner and vector update inside the operator's
   * element loop.
   */
  template <typename Number>
  class ChebyshevSmoother
  {
  public:
    ChebyshevSmoother(const SipOperator<Number> &op,
                      const ElementPreconditioner<Number> &preconditioner,
                      double lambda_max,
                      const ChebyshevOptions &options = {});

    /// Runs options.degree steps. A zero initial guess saves one matrix-
    /// vector product.
    void smooth(std::span<Number> u, std::span<const Number> b, bool zero_initial) const;

    /// Runs @p steps steps with an explicit range.
    void smooth(std::span<Number> u,
                std::span<const Number> b,
                bool zero_initial,
                unsigned steps) const;

    double lambda_max() const { return lambda_max_; }
    double range_lower() const { return a_; }
    double range_upper() const { return b_; }
    const ChebyshevOptions &options() const { return options_; }

  private:
    const SipOperator<Number> &op;
    const ElementPreconditioner<Number> &prec;
    double lambda_max_, a_, b_;
    ChebyshevOptions options_;
    mutable std::vector<Number> work, tmp;
  };

  // ---------------------------------------------------------------------
  // multigrid
  // ---------------------------------------------------------------------

  /**
   * Embedding of the DG space on a mesh into the space of its refinement
   * (prolongation) and the transpose (restriction).
   */
  template <typename Number>
  class Transfer
  {
  public:
    Transfer(const Basis1D &basis, const AffineHexMesh &coarse, const AffineHexMesh &fine);

    /// fine = P coarse
    void prolongate(std::span<Number> fine, std::span<const Number> coarse) const;
    /// coarse = P^T fine
    void restrict(std::span<Number> coarse, std::span<const Number> fine) const;

    /// 1D embedding matrix for child c of a split interval.
    static DenseMatrix embedding_matrix(const Basis1D &basis, unsigned child);

  private:
    const AffineHexMesh *coarse_mesh;
    const AffineHexMesh *fine_mesh;
    std::array<bool, 3> refined;
    unsigned n;
    std::size_t npc;
    Kernel1D<Number> embed[2];
  };

  struct MultigridOptions
  {
    SmootherKind smoother = SmootherKind::point_jacobi;
    ChebyshevOptions chebyshev;
    unsigned lanczos_iterations = 15;
    /// Residual reduction targeted by the coarse Chebyshev solve.
    double coarse_reduction = 1e-5;
    unsigned coarse_max_degree = 200;
    OperatorOptions operator_options;
  };

  template <typename Number>
  class MgHierarchy
  {
  public:
    MgHierarchy(const Basis1D &basis, const AffineHexMesh &fine, const MultigridOptions &options = {});

    std::size_t n_levels() const { return levels.size(); }
    const SipOperator<Number> &op(std::size_t level) const { return *levels[level].op; }
    const ChebyshevSmoother<Number> &smoother(std::size_t level) const { return *levels[level].smoother; }
    unsigned coarse_degree() const { return coarse_degree_; }

    /// u = V b, one V-cycle from a zero initial guess.
    void vcycle(std::span<Number> u, std::span<const Number> b) const;

  private:
    void vcycle(std::size_t level, std::span<Number> u, std::span<const Number> b) const;

    struct Level
    {
      std::unique_ptr<AffineHexMesh> mesh;
      std::unique_ptr<SipOperator<Number>> op;
      std::unique_ptr<ElementPreconditioner<Number>> prec;
      std::unique_ptr<ChebyshevSmoother<Number>> smoother;
      std::unique_ptr<Transfer<Number>> transfer; // to the next coarser level
      mutable std::vector<Number> residual, coarse_rhs, coarse_sol, correction;
    };

    MultigridOptions options_;
    std::vector<Level> levels; // coarse to fine
    unsigned coarse_degree_ = 0;
  };

  // ---------------------------------------------------------------------
  // conjugate gradients
  // ---------------------------------------------------------------------

  struct SolveResult
  {
    std::vector<double> solution;
    unsigned iterations = 0;
    double initial_residual = 0.;
    double final_residual = 0.;
    /// (|r_n| / |r_0|)^{1/n}
    double rate = 0.;
    std::vector<double> residual_history;
  };

  SolveResult pcg_solve(const VectorFunction<double> &apply_a,
                        const VectorFunction<double> &apply_precond,
                        std::span<const double> b,
                        double rel_tol = 1e-9,
                        unsigned max_iterations = 1000);

  /// Preconditioner applying one V-cycle; a single-precision hierarchy is
  /// fed through conversions.
  template <typename Number>
  VectorFunction<double> vcycle_preconditioner(const MgHierarchy<Number> &mg);
} // namespace dgmf
