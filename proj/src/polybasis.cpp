#include <dgmf/polybasis.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dgmf
{
  double jacobi_polynomial(int alpha, int beta, unsigned int n, double x)
  {
    if (n == 0)
      return 1.;
    const double a = alpha;
    const double b = beta;
    double p_prev = 1.;
    double p = 0.5 * (a - b + (a + b + 2.) * x);
    for (unsigned int k = 2; k <= n; ++k)
      {
        const double kk = k;
        const double s = 2. * kk + a + b;
        const double c1 = 2. * kk * (kk + a + b) * (s - 2.);
        const double c2 = (s - 1.) * (s * (s - 2.) * x + a * a - b * b);
        const double c3 = 2. * (kk + a - 1.) * (kk + b - 1.) * s;
        const double p_next = (c2 * p - c3 * p_prev) / c1;
        p_prev = p;
        p = p_next;
      }
    return p;
  }

  std::vector<double> jacobi_roots(int alpha, int beta, unsigned int n)
  {
    std::vector<double> x(n);
    for (unsigned int i = 0; i < n; ++i)
      x[i] = -std::cos((2. * i + 1.) / (2. * n) * std::numbers::pi);

    const double tolerance = 4. * std::numeric_limits<double>::epsilon();
    for (unsigned int k = 0; k < n; ++k)
      {
        double r = x[k];
        if (k > 0)
          r = 0.5 * (r + x[k - 1]);
        for (unsigned int it = 0; it < 100; ++it)
          {
            double s = 0.;
            for (unsigned int i = 0; i < k; ++i)
              s += 1. / (r - x[i]);
            const double df = 0.5 * (alpha + beta + n + 1.) *
                              jacobi_polynomial(alpha + 1, beta + 1, n - 1, r);
            const double f = jacobi_polynomial(alpha, beta, n, r);
            const double delta = f / (f * s - df);
            r += delta;
            if (std::abs(delta) < tolerance)
              break;
          }
        x[k] = r;
      }
    std::sort(x.begin(), x.end());

    for (double &xi : x)
      xi = 0.5 * xi + 0.5;
    if (alpha == beta)
      for (unsigned int k = 0; k < n / 2; ++k)
        {
          const double sym = 0.5 * (x[k] + 1. - x[n - 1 - k]);
          x[k] = sym;
          x[n - 1 - k] = 1. - sym;
        }
    if (alpha == beta && n % 2 == 1)
      x[n / 2] = 0.5;
    return x;
  }

  QuadratureRule1D gauss_rule(unsigned int n, QuadratureKind kind)
  {
    QuadratureRule1D rule;
    if (kind == QuadratureKind::gauss)
      {
        if (n < 1)
          throw ParameterError("gauss_rule: Gauss formula needs n >= 1");
        rule.points = jacobi_roots(0, 0, n);
        for (const double p : rule.points)
          {
            const double x = 2. * p - 1.;
            const double dp = 0.5 * (n + 1.) * jacobi_polynomial(1, 1, n - 1, x);
            rule.weights.push_back(1. / ((1. - x * x) * dp * dp));
          }
      }
    else
      {
        if (n < 2)
          throw ParameterError("gauss_rule: Gauss-Lobatto formula needs n >= 2");
        const std::vector<double> interior = jacobi_roots(1, 1, n - 2);
        rule.points.push_back(0.);
        rule.points.insert(rule.points.end(), interior.begin(), interior.end());
        rule.points.push_back(1.);
        const double nn = n;
        for (const double p : rule.points)
          {
            const double x = 2. * p - 1.;
            const double leg = jacobi_polynomial(0, 0, n - 1, x);
            rule.weights.push_back(1. / (nn * (nn - 1.) * leg * leg));
          }
      }
    // enforce exact symmetry of the weights
    const std::size_t m = rule.weights.size();
    for (std::size_t k = 0; k < m / 2; ++k)
      {
        const double w = 0.5 * (rule.weights[k] + rule.weights[m - 1 - k]);
        rule.weights[k] = rule.weights[m - 1 - k] = w;
      }
    return rule;
  }

  Polynomial::Polynomial(double weight, std::vector<double> roots)
    : weight_(weight)
    , roots_(std::move(roots))
  {}

  double Polynomial::value(double x) const
  {
    double v = weight_;
    for (const double r : roots_)
      v *= (x - r);
    return v;
  }

  void Polynomial::value_and_derivative(double x, double &value, double &derivative) const
  {
    // product rule accumulated left to right: (v, d) <- (v (x-r), d (x-r) + v)
    double v = 1.;
    double d = 0.;
    for (const double r : roots_)
      {
        d = d * (x - r) + v;
        v *= (x - r);
      }
    value = weight_ * v;
    derivative = weight_ * d;
  }

  double Polynomial::derivative(double x) const
  {
    double v, d;
    value_and_derivative(x, v, d);
    return d;
  }

  std::vector<double> Polynomial::monomial_coefficients() const
  {
    std::vector<long double> c(1, static_cast<long double>(weight_));
    for (const double r : roots_)
      {
        std::vector<long double> next(c.size() + 1, 0.L);
        for (std::size_t k = 0; k < c.size(); ++k)
          {
            next[k + 1] += c[k];
            next[k] -= c[k] * static_cast<long double>(r);
          }
        c = std::move(next);
      }
    return {c.begin(), c.end()};
  }

  Polynomial Polynomial::mirrored() const
  {
    std::vector<double> roots;
    roots.reserve(roots_.size());
    for (auto it = roots_.rbegin(); it != roots_.rend(); ++it)
      roots.push_back(1. - *it);
    const double sign = (roots_.size() % 2 == 0) ? 1. : -1.;
    return Polynomial(sign * weight_, std::move(roots));
  }

  std::string_view to_string(BasisKind kind)
  {
    switch (kind)
      {
        case BasisKind::hermite_like:
          return "hermite";
        case BasisKind::nodal_gauss_lobatto:
          return "gauss-lobatto";
        case BasisKind::nodal_gauss:
          return "gauss";
      }
    return "unknown";
  }

  BasisKind parse_basis_kind(std::string_view name)
  {
    if (name == "hermite" || name == "hermite_like" || name == "hermite-like")
      return BasisKind::hermite_like;
    if (name == "gauss-lobatto" || name == "gl" || name == "nodal_gauss_lobatto")
      return BasisKind::nodal_gauss_lobatto;
    if (name == "gauss" || name == "nodal_gauss")
      return BasisKind::nodal_gauss;
    throw ParameterError("unknown basis '" + std::string(name) + "'");
  }

  DenseMatrix Basis1D::coefficients() const
  {
    DenseMatrix c(size(), degree + 1);
    for (std::size_t i = 0; i < size(); ++i)
      {
        const std::vector<double> m = functions[i].monomial_coefficients();
        for (std::size_t k = 0; k < m.size(); ++k)
          c(i, k) = m[k];
      }
    return c;
  }

  namespace
  {
    std::vector<Polynomial> lagrange_polynomials(const std::vector<double> &nodes)
    {
      std::vector<Polynomial> result;
      for (std::size_t j = 0; j < nodes.size(); ++j)
        {
          std::vector<double> roots;
          double denominator = 1.;
          for (std::size_t k = 0; k < nodes.size(); ++k)
            if (k != j)
              {
                roots.push_back(nodes[k]);
                denominator *= nodes[j] - nodes[k];
              }
          result.emplace_back(1. / denominator, std::move(roots));
        }
      return result;
    }

    void build_hermite_like(Basis1D &basis)
    {
      const unsigned int p = basis.degree;
      auto &f = basis.functions;
      if (p == 1)
        {
          f = {Polynomial(-1., {1.}), Polynomial(1., {0.})};
          basis.alpha1 = 1.;
          basis.alpha0 = -1.;
          basis.free_root = 1.;
          return;
        }
      if (p == 2)
        {
          f = {Polynomial(1., {1., 1.}), Polynomial(-2., {0., 1.}), Polynomial(1., {0., 0.})};
          basis.alpha1 = 2.;
          basis.alpha0 = 1.;
          basis.free_root = 1.;
          return;
        }

      const std::vector<double> nodes = jacobi_roots(4, 4, p - 3);
      basis.interior_nodes = nodes;

      // common factor of phi_0 and phi_1: prod (x - x_l) (x - 1)^2
      std::vector<double> common = nodes;
      common.push_back(1.);
      common.push_back(1.);
      const Polynomial b(1., common);

      // orthogonality of phi_0 and phi_1 is linear in the free root:
      // int (x - x1) x b^2 = 0  =>  x1 = int x^2 b^2 / int x b^2
      const QuadratureRule1D quad = gauss_rule(p + 2, QuadratureKind::gauss);
      double m1 = 0., m2 = 0.;
      for (std::size_t q = 0; q < quad.size(); ++q)
        {
          const double x = quad.points[q];
          const double bx = b.value(x);
          m1 += quad.weights[q] * x * bx * bx;
          m2 += quad.weights[q] * x * x * bx * bx;
        }
      const double x1 = m2 / m1;
      basis.free_root = x1;

      std::vector<double> roots0 = common;
      roots0.insert(roots0.begin(), x1);
      Polynomial phi0(1., roots0);
      phi0.scale(1. / phi0.value(0.));

      std::vector<double> roots1 = common;
      roots1.insert(roots1.begin(), 0.);
      Polynomial phi1(1., roots1);
      phi1.scale(-phi0.derivative(0.) / phi1.derivative(0.));

      basis.alpha0 = phi0.weight();
      basis.alpha1 = phi1.derivative(0.);

      f.clear();
      f.push_back(phi0);
      f.push_back(phi1);
      for (std::size_t k = 0; k < nodes.size(); ++k)
        {
          std::vector<double> roots = {0., 0.};
          for (std::size_t m = 0; m < nodes.size(); ++m)
            if (m != k)
              roots.push_back(nodes[m]);
          roots.push_back(1.);
          roots.push_back(1.);
          Polynomial bubble(1., std::move(roots));
          bubble.scale(1. / bubble.value(nodes[k]));
          f.push_back(std::move(bubble));
        }
      f.push_back(phi1.mirrored());
      f.push_back(phi0.mirrored());
    }
  } // namespace

  Basis1D build_basis(unsigned int degree, BasisKind kind)
  {
    if (degree < 1 || degree > 30)
      throw ParameterError("build_basis: degree must be in [1, 30], got " +
                           std::to_string(degree));
    Basis1D basis;
    basis.degree = degree;
    basis.kind = kind;
    switch (kind)
      {
        case BasisKind::hermite_like:
          build_hermite_like(basis);
          break;
        case BasisKind::nodal_gauss_lobatto:
          basis.functions =
            lagrange_polynomials(gauss_rule(degree + 1, QuadratureKind::gauss_lobatto).points);
          break;
        case BasisKind::nodal_gauss:
          basis.functions =
            lagrange_polynomials(gauss_rule(degree + 1, QuadratureKind::gauss).points);
          break;
      }
    return basis;
  }

  BasisMatrices basis_matrices(const Basis1D &basis, const QuadratureRule1D &quad)
  {
    const std::size_t n = basis.size();
    const std::size_t nq = quad.size();
    if (nq < n)
      throw ParameterError("basis_matrices: need at least p+1 quadrature points");

    BasisMatrices bm;
    bm.shape = DenseMatrix(nq, n);
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t j = 0; j < n; ++j)
        bm.shape(q, j) = basis.functions[j].value(quad.points[q]);

    // collocation derivative through barycentric weights
    std::vector<double> bary(nq, 1.);
    for (std::size_t r = 0; r < nq; ++r)
      for (std::size_t k = 0; k < nq; ++k)
        if (k != r)
          bary[r] /= (quad.points[r] - quad.points[k]);
    bm.derivative = DenseMatrix(nq, nq);
    for (std::size_t q = 0; q < nq; ++q)
      {
        double diag = 0.;
        for (std::size_t r = 0; r < nq; ++r)
          if (r != q)
            {
              const double d = (bary[r] / bary[q]) / (quad.points[q] - quad.points[r]);
              bm.derivative(q, r) = d;
              diag -= d;
            }
        bm.derivative(q, q) = diag;
      }
    // exact antisymmetry under point reflection
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t r = 0; r < nq; ++r)
        if (q * nq + r < (nq - 1 - q) * nq + (nq - 1 - r))
          {
            const double a =
              0.5 * (bm.derivative(q, r) - bm.derivative(nq - 1 - q, nq - 1 - r));
            bm.derivative(q, r) = a;
            bm.derivative(nq - 1 - q, nq - 1 - r) = -a;
          }
        else if (q == nq - 1 - q && r == nq - 1 - r)
          bm.derivative(q, r) = 0.;

    for (unsigned int side = 0; side < 2; ++side)
      {
        bm.face_value[side].resize(n);
        bm.face_derivative[side].resize(n);
        for (std::size_t j = 0; j < n; ++j)
          basis.functions[j].value_and_derivative(static_cast<double>(side),
                                                  bm.face_value[side][j],
                                                  bm.face_derivative[side][j]);
      }
    return bm;
  }

  DenseMatrix mass_matrix(const std::vector<Polynomial> &functions)
  {
    unsigned int max_degree = 0;
    for (const auto &f : functions)
      max_degree = std::max(max_degree, f.degree());
    const QuadratureRule1D quad = gauss_rule(max_degree + 1, QuadratureKind::gauss);
    const std::size_t n = functions.size();
    DenseMatrix values(quad.size(), n);
    for (std::size_t q = 0; q < quad.size(); ++q)
      for (std::size_t j = 0; j < n; ++j)
        values(q, j) = functions[j].value(quad.points[q]);
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        {
          double sum = 0.;
          for (std::size_t q = 0; q < quad.size(); ++q)
            sum += quad.weights[q] * values(q, i) * values(q, j);
          m(i, j) = sum;
        }
    return m;
  }

  namespace
  {
    double condition_number(const DenseMatrix &m)
    {
      const SymmetricEigenpairs eig = symmetric_eigen(m, 1e-14);
      if (!(eig.values.front() > 0.))
        throw NumericalError("mass matrix is singular or indefinite");
      return eig.values.back() / eig.values.front();
    }
  } // namespace

  double mass_condition(const Basis1D &basis, const QuadratureRule1D &quad)
  {
    const std::size_t n = basis.size();
    DenseMatrix m(n, n);
    for (std::size_t q = 0; q < quad.size(); ++q)
      for (std::size_t i = 0; i < n; ++i)
        {
          const double vi = basis.functions[i].value(quad.points[q]);
          for (std::size_t j = 0; j < n; ++j)
            m(i, j) += quad.weights[q] * vi * basis.functions[j].value(quad.points[q]);
        }
    return condition_number(m);
  }

  double hermite_legendre_condition(unsigned int degree)
  {
    if (degree < 3)
      throw ParameterError("hermite_legendre_condition: degree must be at least 3");
    std::vector<Polynomial> f;
    f.emplace_back(2., std::vector<double>{1., 1., -0.5});
    f.emplace_back(1., std::vector<double>{0., 1., 1.});
    for (unsigned int k = 0; k + 4 <= degree; ++k)
      {
        // sqrt(2k+1) P_k(2x-1) has leading coefficient sqrt(2k+1) (2k)!/(k!)^2
        double lead = std::sqrt(2. * k + 1.);
        for (unsigned int m = 1; m <= k; ++m)
          lead *= (static_cast<double>(k + m) / m);
        std::vector<double> roots = {0., 0., 1., 1.};
        if (k > 0)
          {
            const auto legendre_roots = gauss_rule(k, QuadratureKind::gauss).points;
            roots.insert(roots.end(), legendre_roots.begin(), legendre_roots.end());
          }
        f.emplace_back(16. * lead, std::move(roots));
      }
    f.emplace_back(1., std::vector<double>{0., 0., 1.});
    f.emplace_back(-2., std::vector<double>{0., 0., 1.5});
    return condition_number(mass_matrix(f));
  }

  DenseMatrix change_of_basis(const Basis1D &from, const Basis1D &to)
  {
    if (from.size() != to.size())
      throw ParameterError("change_of_basis: bases span different spaces");
    const std::size_t n = from.size();
    const QuadratureRule1D points = gauss_rule(n, QuadratureKind::gauss);
    DenseMatrix v_from(n, n), v_to(n, n);
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t j = 0; j < n; ++j)
        {
          v_from(q, j) = from.functions[j].value(points.points[q]);
          v_to(q, j) = to.functions[j].value(points.points[q]);
        }
    return inverse(v_from) * v_to;
  }
} // namespace dgmf
