#include <dgmf/operator.h>

namespace dgmf
{
  int n_threads()
  {
#ifdef DGMF_WITH_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
  }

  void set_n_threads(int n)
  {
    if (n < 1)
      throw ParameterError("set_n_threads: need at least one thread");
#ifdef DGMF_WITH_OPENMP
    omp_set_num_threads(n);
#else
    if (n != 1)
      throw ParameterError("set_n_threads: built without OpenMP, only 1 thread available");
#endif
  }

  double exact_solution(double x, double y, double z)
  {
    const double k = 3. * std::numbers::pi;
    return std::sin(k * x) * std::sin(k * y) * std::sin(k * z);
  }

  double manufactured_forcing(double x, double y, double z)
  {
    return 27. * std::numbers::pi * std::numbers::pi * exact_solution(x, y, z);
  }

  namespace
  {
    struct CellQuadrature
    {
      QuadratureRule1D quad;
      BasisMatrices bm;
      ShapeKernels<double> sk;
      std::vector<std::array<double, 3>> points;
      std::vector<double> weights;

      CellQuadrature(const Basis1D &basis, unsigned nq)
        : quad(gauss_rule(nq, QuadratureKind::gauss))
        , bm(basis_matrices(basis, quad))
        , sk(bm, 3)
      {
        for (unsigned k = 0; k < nq; ++k)
          for (unsigned j = 0; j < nq; ++j)
            for (unsigned i = 0; i < nq; ++i)
              {
                points.push_back({quad.points[i], quad.points[j], quad.points[k]});
                weights.push_back(quad.weights[i] * quad.weights[j] * quad.weights[k]);
              }
      }
    };
  } // namespace

  std::vector<double> assemble_rhs(const Basis1D &basis,
                                   const AffineHexMesh &mesh,
                                   unsigned n_q,
                                   const ScalarFunction &f)
  {
    const CellQuadrature cq(basis, n_q);
    const double det = determinant3(mesh.jacobian());
    const std::size_t npc = cq.sk.dofs_per_cell();
    std::vector<double> b(npc * mesh.n_elements());
    std::vector<double> values(cq.sk.buffer_size()), tmp(cq.sk.buffer_size());
    for (std::size_t e = 0; e < mesh.n_elements(); ++e)
      {
        for (std::size_t q = 0; q < cq.points.size(); ++q)
          values[q] = f(mesh.map_point(e, cq.points[q])) * cq.weights[q] * det;
        cell_integrate(cq.sk, values.data(), tmp.data(), b.data() + e * npc, false);
      }
    return b;
  }

  double l2_error(const Basis1D &basis,
                  const AffineHexMesh &mesh,
                  std::span<const double> u,
                  const ScalarFunction &exact)
  {
    const CellQuadrature cq(basis, basis.degree + 2);
    const double det = determinant3(mesh.jacobian());
    const std::size_t npc = cq.sk.dofs_per_cell();
    if (u.size() != npc * mesh.n_elements())
      throw ParameterError("l2_error: vector size mismatch");
    std::vector<double> values(cq.sk.buffer_size()), tmp(cq.sk.buffer_size());
    double sum = 0.;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e)
      {
        cell_interpolate(cq.sk, u.data() + e * npc, values.data(), tmp.data());
        for (std::size_t q = 0; q < cq.points.size(); ++q)
          {
            const double diff = values[q] - exact(mesh.map_point(e, cq.points[q]));
            sum += diff * diff * cq.weights[q] * det;
          }
      }
    return std::sqrt(sum);
  }

  std::vector<double> project(const Basis1D &basis,
                              const AffineHexMesh &mesh,
                              const ScalarFunction &f)
  {
    const CellQuadrature cq(basis, basis.degree + 2);
    const unsigned n = basis.degree + 1;
    DenseMatrix mass(n, n);
    for (unsigned i = 0; i < n; ++i)
      for (unsigned j = 0; j < n; ++j)
        for (std::size_t q = 0; q < cq.quad.size(); ++q)
          mass(i, j) += cq.bm.shape(q, i) * cq.bm.shape(q, j) * cq.quad.weights[q];
    const Kernel1D<double> inv_mass(inverse(mass));
    const std::array<unsigned, 3> ext = {n, n, n};

    const std::size_t npc = cq.sk.dofs_per_cell();
    std::vector<double> u(npc * mesh.n_elements());
    std::vector<double> values(cq.sk.buffer_size()), tmp(cq.sk.buffer_size()), rhs(npc);
    for (std::size_t e = 0; e < mesh.n_elements(); ++e)
      {
        for (std::size_t q = 0; q < cq.points.size(); ++q)
          values[q] = f(mesh.map_point(e, cq.points[q])) * cq.weights[q];
        cell_integrate(cq.sk, values.data(), tmp.data(), rhs.data(), false);
        double *out = u.data() + e * npc;
        inv_mass.apply(rhs.data(), tmp.data(), ext, 0, false);
        inv_mass.apply(tmp.data(), rhs.data(), ext, 1, false);
        inv_mass.apply(rhs.data(), out, ext, 2, false);
      }
    return u;
  }
} // namespace dgmf
