#include <dgmf/mesh.h>

#include <algorithm>
#include <cmath>

namespace dgmf
{
  std::uint64_t morton_encode(const std::array<unsigned, 3> &index, const Levels &levels)
  {
    std::uint64_t code = 0;
    unsigned pos = 0;
    const unsigned max_level = std::max({levels[0], levels[1], levels[2]});
    for (unsigned b = 0; b < max_level; ++b)
      for (unsigned d = 0; d < 3; ++d)
        if (b < levels[d])
          code |= std::uint64_t((index[d] >> b) & 1u) << pos++;
    return code;
  }

  std::array<unsigned, 3> morton_decode(std::uint64_t code, const Levels &levels)
  {
    std::array<unsigned, 3> index = {0, 0, 0};
    unsigned pos = 0;
    const unsigned max_level = std::max({levels[0], levels[1], levels[2]});
    for (unsigned b = 0; b < max_level; ++b)
      for (unsigned d = 0; d < 3; ++d)
        if (b < levels[d])
          index[d] |= unsigned((code >> pos++) & 1u) << b;
    return index;
  }

  AffineHexMesh::AffineHexMesh(const Levels &levels, const Box &box, const DenseMatrix &geometry)
    : levels_(levels)
    , box_(box)
    , geometry_(geometry)
  {
    if (geometry.rows() != 3 || geometry.cols() != 3)
      throw ParameterError("build_mesh: geometry must be a 3x3 matrix");
    if (!(determinant3(geometry) > 1e-14))
      throw ParameterError("build_mesh: degenerate or inverted geometry map");
    if (levels[0] + levels[1] + levels[2] > 30)
      throw ParameterError("build_mesh: too many elements");

    jacobian_ = geometry;
    for (unsigned d = 0; d < 3; ++d)
      {
        if (!(box[d][1] > box[d][0]))
          throw ParameterError("build_mesh: empty box");
        n_per_dim_[d] = 1u << levels[d];
        widths_[d] = (box[d][1] - box[d][0]) / n_per_dim_[d];
        for (unsigned r = 0; r < 3; ++r)
          jacobian_(r, d) = geometry(r, d) * widths_[d];
      }

    const std::size_t n = std::size_t(n_per_dim_[0]) * n_per_dim_[1] * n_per_dim_[2];
    lattice_.resize(n);
    lattice_to_element_.resize(n);
    for (std::size_t e = 0; e < n; ++e)
      {
        lattice_[e] = morton_decode(e, levels);
        const auto &l = lattice_[e];
        lattice_to_element_[l[0] + n_per_dim_[0] * (l[1] + std::size_t(n_per_dim_[1]) * l[2])] = e;
      }

    neighbors_.resize(n);
    for (std::size_t e = 0; e < n; ++e)
      for (unsigned face = 0; face < 6; ++face)
        {
          const unsigned k = face / 2;
          std::array<unsigned, 3> l = lattice_[e];
          if (face % 2 == 0)
            {
              if (l[k] == 0)
                {
                  neighbors_[e][face] = -1;
                  continue;
                }
              --l[k];
            }
          else
            {
              if (l[k] + 1 == n_per_dim_[k])
                {
                  neighbors_[e][face] = -1;
                  continue;
                }
              ++l[k];
            }
          neighbors_[e][face] = static_cast<std::int64_t>(element_at(l));
        }
  }

  std::size_t AffineHexMesh::element_at(const std::array<unsigned, 3> &l) const
  {
    return lattice_to_element_[l[0] + n_per_dim_[0] * (l[1] + std::size_t(n_per_dim_[1]) * l[2])];
  }

  std::array<double, 3> AffineHexMesh::map_point(std::size_t element,
                                                 const std::array<double, 3> &xi) const
  {
    std::array<double, 3> ref;
    for (unsigned d = 0; d < 3; ++d)
      ref[d] = box_[d][0] + widths_[d] * (lattice_[element][d] + xi[d]);
    std::array<double, 3> x = {0., 0., 0.};
    for (unsigned r = 0; r < 3; ++r)
      for (unsigned d = 0; d < 3; ++d)
        x[r] += geometry_(r, d) * ref[d];
    return x;
  }

  AffineHexMesh build_mesh(const Levels &levels, const Box &box, const DenseMatrix &geometry)
  {
    return AffineHexMesh(levels, box, geometry);
  }

  AffineHexMesh build_mesh(const Levels &levels)
  {
    return AffineHexMesh(levels, {{{0., 1.}, {0., 1.}, {0., 1.}}}, DenseMatrix::identity(3));
  }

  AffineHexMesh coarsen(const AffineHexMesh &mesh)
  {
    Levels l = mesh.levels();
    const unsigned max_level = std::max({l[0], l[1], l[2]});
    if (max_level == 0)
      throw ParameterError("coarsen: mesh has no coarser level");
    for (auto &v : l)
      if (v == max_level)
        --v;
    return AffineHexMesh(l, mesh.box(), mesh.geometry());
  }

  Box experiment_box(const Levels &l)
  {
    std::array<double, 3> a = {1., 1., 1.};
    if (l[0] == l[1] && l[1] == l[2])
      ;
    else if (l[0] == l[1] + 1 && l[1] == l[2])
      a = {3., 1., 1.};
    else if (l[0] == l[1] && l[1] == l[2] + 1)
      a = {3., 3., 1.};
    else
      throw ParameterError("experiment_box: levels must follow the sequence "
                           "(l,l,l), (l+1,l,l), (l+1,l+1,l)");
    return {{{-1., a[0]}, {-1., a[1]}, {-1., a[2]}}};
  }

  Box benchmark_box()
  {
    return {{{-0.95, 0.95}, {-0.9, 0.89}, {-0.85, 0.83}}};
  }

  DenseMatrix benchmark_geometry()
  {
    return DenseMatrix{{1.12, 0.24, 0.36}, {0.24, 1.36, 0.48}, {0.36, 0.48, 1.60}};
  }

  MetricTerms metric_terms(const AffineHexMesh &mesh)
  {
    MetricTerms m;
    m.jacobian = mesh.jacobian();
    m.det = determinant3(m.jacobian);
    const DenseMatrix inv = inverse(m.jacobian);
    m.inv_jac = inv.transpose();
    m.merged_cell = inv * m.inv_jac;
    for (auto &v : m.merged_cell.values())
      v *= m.det;
    for (unsigned i = 0; i < 3; ++i)
      for (unsigned j = i + 1; j < 3; ++j)
        m.merged_cell(i, j) = m.merged_cell(j, i) =
          0.5 * (m.merged_cell(i, j) + m.merged_cell(j, i));

    for (unsigned k = 0; k < 3; ++k)
      {
        // J^{-T} e_k is column k of inv_jac
        std::array<double, 3> g;
        double norm = 0.;
        for (unsigned r = 0; r < 3; ++r)
          {
            g[r] = m.inv_jac(r, k);
            norm += g[r] * g[r];
          }
        norm = std::sqrt(norm);
        m.h_normal[k] = 1. / norm;
        m.face_jxw[k] = m.det * norm;
        for (unsigned r = 0; r < 3; ++r)
          {
            m.face_normals[2 * k + 1][r] = g[r] / norm;
            m.face_normals[2 * k][r] = -g[r] / norm;
          }
        for (unsigned r = 0; r < 3; ++r)
          {
            double a = 0.;
            for (unsigned c = 0; c < 3; ++c)
              a += inv(r, c) * m.face_normals[2 * k + 1][c];
            m.normal_ref[k][r] = a;
          }
      }
    return m;
  }
} // namespace dgmf
