#pragma once

#include <dgmf/solver.h>

#include <optional>
#include <string>
#include <vector>

namespace dgmf
{
  enum class Precision
  {
    /// everything in double precision
    double_precision,
    /// single precision operator (matvec) or V-cycle (solve), double CG
    mixed
  };

  std::string_view to_string(Precision precision);
  /// Accepts "double" and "mixed".
  Precision parse_precision(std::string_view name);

  struct BenchConfig
  {
    /// bench-matvec, solve or models
    std::string command = "bench-matvec";
    BasisKind basis = BasisKind::hermite_like;
    unsigned degree = 3;
    Levels levels = {3, 3, 3};
    /// Gauss points per direction, 0 means p+1.
    unsigned n_q = 0;
    unsigned n_repeats = 40;
    unsigned n_matvecs = 200;
    int threads = 1;
    Precision precision = Precision::double_precision;
    SmootherKind smoother = SmootherKind::point_jacobi;
    unsigned cheby_degree = 5;
    /// Configurations with more unknowns are rejected.
    double max_dofs = 2e8;
  };

  /// Throws ParameterError for p = 0, zero repeats or matvecs, and so on.
  void validate(const BenchConfig &config);

  /// (p+1)^3 2^(l1+l2+l3)
  std::size_t n_dofs(const BenchConfig &config);

  /// Smallest levels l1 >= l2 >= l3 >= l1 - 1 with at least @p min_dofs
  /// unknowns at degree p.
  Levels default_levels(unsigned degree, double min_dofs = 2e5);

  struct ExperimentRecord
  {
    BenchConfig config;
    std::optional<std::size_t> n_dof;
    /// matvec: best time for n_matvecs products; solve: CG time
    std::optional<double> seconds;
    /// 1e-9 n_matvecs n_dof / seconds
    std::optional<double> gdof_per_s;
    std::optional<unsigned> n9;
    std::optional<double> rho;
    std::optional<double> mdof_per_s_solved;
    double model_flop_per_dof = 0.;
    double model_words_per_element = 0.;
  };

  /**
   * FLOP per unknown of one operator evaluation with element-wise face
   * integrals, all 1D sweeps in even-odd form:
   *   cell: 12 sweeps of n^2 lines (6 for collocated Gauss points) plus 18
   *         FLOP per quadrature point,
   *   face: for each of the 6 faces, the neighbor interpolation and the own
   *         integration, each a contraction along the normal (3n^2 Hermite,
   *         2n^3 Gauss-Lobatto, 4n^3 Gauss) plus 6 (2) sweeps of n lines on
   *         the face, plus 23 FLOP per face quadrature point.
   * The own-side face interpolation is counted as part of the cell work.
   */
  double model_flops(unsigned degree, BasisKind basis);

  /// FLOP of one even-odd 1D interpolation line with n inputs and outputs.
  double model_line_flops(unsigned n);

  /// Vector entries read per element: (p+1)^d + 4d(p+1)^(d-1) for the
  /// Hermite-like basis, (2d+1)(p+1)^d for nodal bases.
  double model_access(unsigned degree, unsigned dim, BasisKind basis);

  /// Times n_repeats runs of n_matvecs products after 3 warm-up products
  /// and records the fastest, on the deformed benchmark mesh.
  ExperimentRecord bench_matvec(const BenchConfig &config);

  /**
   * Poisson problem with u = sin(3 pi x) sin(3 pi y) sin(3 pi z) on the
   * experiment box, CG with a multigrid V-cycle to a residual reduction of
   * 1e9. Setup time is excluded from the reported time.
   */
  ExperimentRecord run_solver_experiment(const BenchConfig &config);

  /// Record of the analytic models only.
  ExperimentRecord model_record(const BenchConfig &config);

  /// Column names of the CSV output.
  const std::vector<std::string> &csv_columns();

  /// Header row plus one row per record, 6 significant digits, empty
  /// fields where a value does not apply.
  std::string to_csv(const std::vector<ExperimentRecord> &records);
  std::vector<ExperimentRecord> parse_csv(const std::string &text);

  /// Writes to_csv(records) to @p path; throws std::runtime_error on I/O
  /// failure.
  void emit_csv(const std::vector<ExperimentRecord> &records, const std::string &path);

  /// Column-aligned text table.
  std::string format_report(const std::vector<ExperimentRecord> &records);
} // namespace dgmf
