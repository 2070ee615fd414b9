#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "topoforge/generator.hpp"
#include "topoforge/mesh_fem.hpp"

namespace topoforge {

/// One solved problem as persisted: the raw setting parameters, the
/// optimized design, its compliance, the design sensitivity, and what the
/// solve cost. Files hold any number of these back to back; every record is
/// self-describing ("TDTO" magic, version byte, sizes, little-endian 64-bit
/// floats).
struct SolveRecord {
    std::vector<double> setting;  // raw parameters, case-dependent length
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad_f;
    std::int64_t fea_count = 0;
};

void write_records(const std::string& path, const std::vector<SolveRecord>& records);
std::vector<SolveRecord> read_records(const std::string& path);

/// Generator checkpoint: same magic and version byte, an architecture
/// descriptor (layer count + widths), then per layer the weight matrix
/// row-major and the bias vector.
void write_model(const std::string& path, const GeneratorParams& params);
GeneratorParams read_model(const std::string& path);

/// Binary PGM (P5, maxval 255), pixel = round(255 rho), rows top-down.
void write_pgm(const std::string& path, const Mesh& mesh, const Eigen::VectorXd& rho);
Eigen::VectorXd read_pgm(const std::string& path, const Mesh& mesh);

/// Acquisition log, one row per iteration, flushed as written so an
/// interrupted run keeps everything completed. Setting parameters are
/// joined with ';' to stay a single CSV cell.
class HistoryWriter {
  public:
    explicit HistoryWriter(const std::string& path);
    void append(int iteration, double remaining_budget, const std::vector<double>& setting,
                double score, double test_metric);

  private:
    std::ofstream out_;
};

/// Shortest round-trippable decimal form (%.17g), shared by CSV and config
/// serialization so equal doubles always print equal bytes.
std::string format_double(double v);

}  // namespace topoforge
