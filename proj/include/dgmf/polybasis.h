#pragma once

#include <dgmf/dense.h>

#include <string>
#include <string_view>
#include <vector>

namespace dgmf
{
  /**
   * Quadrature formula on the reference interval (0,1).
   */
  struct QuadratureRule1D
  {
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
  };

  enum class QuadratureKind
  {
    gauss,
    gauss_lobatto
  };

  /// Gauss or Gauss-Lobatto rule with @p n points on (0,1). Needs n >= 1
  /// (Gauss) or n >= 2 (Gauss-Lobatto).
  QuadratureRule1D gauss_rule(unsigned int n, QuadratureKind kind);

  /**
   * Roots of the Jacobi polynomial P^{alpha,beta}_n, mapped from (-1,1) to
   * (0,1), in increasing order. Newton iteration with deflation against the
   * roots already found, started from Chebyshev nodes.
   */
  std::vector<double> jacobi_roots(int alpha, int beta, unsigned int n);

  /// Value of P^{alpha,beta}_n at x in (-1,1) through the three-term recurrence.
  double jacobi_polynomial(int alpha, int beta, unsigned int n, double x);

  /**
   * Polynomial in product form w * prod_k (x - r_k). Evaluating in this form
   * keeps full accuracy up to high degrees where the monomial expansion
   * suffers from cancellation.
   */
  class Polynomial
  {
  public:
    Polynomial() = default;
    Polynomial(double weight, std::vector<double> roots);

    double value(double x) const;
    double derivative(double x) const;
    /// Value and first derivative in one pass.
    void value_and_derivative(double x, double &value, double &derivative) const;

    unsigned int degree() const { return static_cast<unsigned int>(roots_.size()); }
    double weight() const { return weight_; }
    const std::vector<double> &roots() const { return roots_; }

    /// Monomial coefficients c_k of sum_k c_k x^k, computed in extended precision.
    std::vector<double> monomial_coefficients() const;

    /// The mirrored polynomial q(x) = p(1 - x).
    Polynomial mirrored() const;

    void scale(double factor) { weight_ *= factor; }

  private:
    double weight_ = 1.;
    std::vector<double> roots_;
  };

  enum class BasisKind
  {
    hermite_like,
    nodal_gauss_lobatto,
    nodal_gauss
  };

  std::string_view to_string(BasisKind kind);
  /// Accepts the CLI spellings "hermite", "gauss-lobatto" and "gauss".
  BasisKind parse_basis_kind(std::string_view name);

  /**
   * One-dimensional polynomial basis of degree p on (0,1) with shape
   * functions phi_0..phi_p.
   */
  struct Basis1D
  {
    unsigned int degree = 0;
    BasisKind kind = BasisKind::hermite_like;
    std::vector<Polynomial> functions;

    // Construction parameters, only meaningful for the Hermite-like basis.
    double free_root = 0.;      // xi_1
    double alpha0 = 0.;         // leading factor of phi_0
    double alpha1 = 0.;         // D_f = [-alpha1, alpha1, 0, ...]
    std::vector<double> interior_nodes;

    std::size_t size() const { return functions.size(); }

    /// Row i holds the monomial coefficients of phi_i.
    DenseMatrix coefficients() const;
  };

  /// Builds the basis of the given kind for 1 <= p <= 30.
  Basis1D build_basis(unsigned int degree, BasisKind kind);

  /**
   * Reference-element matrices of a basis for a given quadrature formula.
   *   shape       S(q,j)  = phi_j(xi_q), n_q x (p+1)
   *   derivative  D(q,r)  = derivative of the Lagrange polynomial in the
   *                         quadrature points, n_q x n_q (collocation)
   *   face_value[s], face_derivative[s]: values and first derivatives of all
   *   phi_j at xi = s for s = 0, 1.
   */
  struct BasisMatrices
  {
    DenseMatrix shape;
    DenseMatrix derivative;
    std::vector<double> face_value[2];
    std::vector<double> face_derivative[2];

    std::size_t n_dofs_1d() const { return shape.cols(); }
    std::size_t n_q_1d() const { return shape.rows(); }
  };

  BasisMatrices basis_matrices(const Basis1D &basis, const QuadratureRule1D &quad);

  /// Consistent 1D mass matrix on the unit interval, integrated exactly.
  DenseMatrix mass_matrix(const std::vector<Polynomial> &functions);

  /// Condition number of the 1D mass matrix of @p basis, computed with the
  /// given quadrature (which must integrate degree 2p exactly).
  double mass_condition(const Basis1D &basis, const QuadratureRule1D &quad);

  /**
   * Condition number of the mass matrix of the naive higher-order Hermite
   * basis: the four cubic Hermite polynomials plus bubbles
   * 16 x^2 (1-x)^2 L_k(x) with L2-normalized shifted Legendre polynomials L_k.
   */
  double hermite_legendre_condition(unsigned int degree);

  /// Matrix C with phi^{to}_j = sum_i C(i,j) phi^{from}_i, i.e. it maps
  /// coefficients in basis @p to into coefficients in basis @p from.
  DenseMatrix change_of_basis(const Basis1D &from, const Basis1D &to);
} // namespace dgmf
