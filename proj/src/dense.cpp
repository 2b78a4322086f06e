#include <dgmf/dense.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dgmf
{
  DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double value)
    : n_rows(rows)
    , n_cols(cols)
    , data(rows * cols, value)
  {}

  DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : n_rows(rows.size())
    , n_cols(rows.size() > 0 ? rows.begin()->size() : 0)
  {
    data.reserve(n_rows * n_cols);
    for (const auto &row : rows)
      {
        if (row.size() != n_cols)
          throw ParameterError("DenseMatrix: ragged initializer list");
        data.insert(data.end(), row.begin(), row.end());
      }
  }

  DenseMatrix DenseMatrix::identity(std::size_t n)
  {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      m(i, i) = 1.;
    return m;
  }

  DenseMatrix DenseMatrix::transpose() const
  {
    DenseMatrix t(n_cols, n_rows);
    for (std::size_t i = 0; i < n_rows; ++i)
      for (std::size_t j = 0; j < n_cols; ++j)
        t(j, i) = (*this)(i, j);
    return t;
  }

  DenseMatrix DenseMatrix::operator*(const DenseMatrix &other) const
  {
    if (n_cols != other.n_rows)
      throw ParameterError("DenseMatrix: incompatible sizes in product");
    DenseMatrix c(n_rows, other.n_cols);
    for (std::size_t i = 0; i < n_rows; ++i)
      for (std::size_t k = 0; k < n_cols; ++k)
        {
          const double a = (*this)(i, k);
          for (std::size_t j = 0; j < other.n_cols; ++j)
            c(i, j) += a * other(k, j);
        }
    return c;
  }

  std::vector<double> DenseMatrix::operator*(std::span<const double> x) const
  {
    if (x.size() != n_cols)
      throw ParameterError("DenseMatrix: incompatible vector size");
    std::vector<double> y(n_rows, 0.);
    for (std::size_t i = 0; i < n_rows; ++i)
      {
        double sum = 0.;
        for (std::size_t j = 0; j < n_cols; ++j)
          sum += (*this)(i, j) * x[j];
        y[i] = sum;
      }
    return y;
  }

  double DenseMatrix::norm() const
  {
    double sum = 0.;
    for (const double v : data)
      sum += v * v;
    return std::sqrt(sum);
  }

  double DenseMatrix::linfty_norm() const
  {
    double result = 0.;
    for (std::size_t i = 0; i < n_rows; ++i)
      {
        double row = 0.;
        for (std::size_t j = 0; j < n_cols; ++j)
          row += std::abs((*this)(i, j));
        result = std::max(result, row);
      }
    return result;
  }

  DenseMatrix operator-(const DenseMatrix &a, const DenseMatrix &b)
  {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ParameterError("DenseMatrix: incompatible sizes in difference");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j)
        c(i, j) -= b(i, j);
    return c;
  }

  SymmetricEigenpairs symmetric_eigen(const DenseMatrix &input, double rel_tol)
  {
    const std::size_t n = input.rows();
    if (input.cols() != n)
      throw ParameterError("symmetric_eigen: matrix must be square");

    DenseMatrix a = input;
    DenseMatrix v = DenseMatrix::identity(n);
    const double reference = std::max(a.norm(), 1e-300);

    auto off_norm = [&]() {
      double sum = 0.;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j)
            sum += a(i, j) * a(i, j);
      return std::sqrt(sum);
    };

    for (unsigned int sweep = 0; sweep < 100 && off_norm() > rel_tol * reference; ++sweep)
      for (std::size_t p = 0; p + 1 < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
          {
            const double apq = a(p, q);
            if (apq == 0.)
              continue;
            const double theta = (a(q, q) - a(p, p)) / (2. * apq);
            const double t = (theta >= 0. ? 1. : -1.) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.));
            const double c = 1. / std::sqrt(t * t + 1.);
            const double s = t * c;
            for (std::size_t k = 0; k < n; ++k)
              {
                const double akp = a(k, p);
                const double akq = a(k, q);
                a(k, p) = c * akp - s * akq;
                a(k, q) = s * akp + c * akq;
              }
            for (std::size_t k = 0; k < n; ++k)
              {
                const double apk = a(p, k);
                const double aqk = a(q, k);
                a(p, k) = c * apk - s * aqk;
                a(q, k) = s * apk + c * aqk;
              }
            for (std::size_t k = 0; k < n; ++k)
              {
                const double vkp = v(k, p);
                const double vkq = v(k, q);
                v(k, p) = c * vkp - s * vkq;
                v(k, q) = s * vkp + c * vkq;
              }
          }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymmetricEigenpairs result;
    result.values.resize(n);
    result.vectors = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k)
      {
        result.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i)
          result.vectors(i, k) = v(i, order[k]);
      }
    return result;
  }

  DenseMatrix cholesky(const DenseMatrix &a)
  {
    const std::size_t n = a.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j)
      {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k)
          diag -= l(j, k) * l(j, k);
        if (!(diag > 0.))
          throw NumericalError("cholesky: matrix is not positive definite");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i)
          {
            double sum = a(i, j);
            for (std::size_t k = 0; k < j; ++k)
              sum -= l(i, k) * l(j, k);
            l(i, j) = sum / l(j, j);
          }
      }
    return l;
  }

  namespace
  {
    struct LU
    {
      DenseMatrix lu;
      std::vector<std::size_t> pivots;
    };

    LU lu_factorize(DenseMatrix a)
    {
      const std::size_t n = a.rows();
      if (a.cols() != n)
        throw ParameterError("LU: matrix must be square");
      std::vector<std::size_t> piv(n);
      for (std::size_t k = 0; k < n; ++k)
        {
          std::size_t p = k;
          for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k)))
              p = i;
          if (a(p, k) == 0.)
            throw NumericalError("LU: singular matrix");
          piv[k] = p;
          if (p != k)
            for (std::size_t j = 0; j < n; ++j)
              std::swap(a(k, j), a(p, j));
          for (std::size_t i = k + 1; i < n; ++i)
            {
              a(i, k) /= a(k, k);
              for (std::size_t j = k + 1; j < n; ++j)
                a(i, j) -= a(i, k) * a(k, j);
            }
        }
      return {std::move(a), std::move(piv)};
    }

    void lu_solve(const LU &f, std::vector<double> &b)
    {
      const std::size_t n = f.lu.rows();
      for (std::size_t k = 0; k < n; ++k)
        std::swap(b[k], b[f.pivots[k]]);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
          b[i] -= f.lu(i, j) * b[j];
      for (std::size_t i = n; i-- > 0;)
        {
          for (std::size_t j = i + 1; j < n; ++j)
            b[i] -= f.lu(i, j) * b[j];
          b[i] /= f.lu(i, i);
        }
    }
  } // namespace

  std::vector<double> solve(DenseMatrix a, std::vector<double> b)
  {
    if (b.size() != a.rows())
      throw ParameterError("solve: incompatible right hand side");
    const LU f = lu_factorize(std::move(a));
    lu_solve(f, b);
    return b;
  }

  DenseMatrix inverse(const DenseMatrix &a)
  {
    const std::size_t n = a.rows();
    const LU f = lu_factorize(a);
    DenseMatrix inv(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j)
      {
        std::fill(col.begin(), col.end(), 0.);
        col[j] = 1.;
        lu_solve(f, col);
        for (std::size_t i = 0; i < n; ++i)
          inv(i, j) = col[i];
      }
    return inv;
  }

  SymmetricEigenpairs generalized_symmetric_eigen(const DenseMatrix &a, const DenseMatrix &b)
  {
    const std::size_t n = a.rows();
    const DenseMatrix l = cholesky(b);
    const DenseMatrix l_inv = inverse(l);
    DenseMatrix c = l_inv * a * l_inv.transpose();
    // symmetrize against roundoff before the rotations
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
    SymmetricEigenpairs eig = symmetric_eigen(c, 1e-15);
    eig.vectors = l_inv.transpose() * eig.vectors;
    return eig;
  }

  double determinant3(const DenseMatrix &a)
  {
    if (a.rows() != 3 || a.cols() != 3)
      throw ParameterError("determinant3: matrix must be 3x3");
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
} // namespace dgmf
