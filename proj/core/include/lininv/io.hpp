#pragma once

#include <filesystem>
#include <string>

#include "lininv/solvers.hpp"
#include "lininv/study.hpp"

namespace lininv::io {

// Binary container: 8-byte magic, u64 dims, u64 partition header, row-major
// f64 payload. Little-endian only.
void write_operator_binary(const std::filesystem::path& path, const BlockOperator& op);
BlockOperator read_operator_binary(const std::filesystem::path& path);  // norms not computed

void write_vector_binary(const std::filesystem::path& path, const Vector& v);
Vector read_vector_binary(const std::filesystem::path& path);

void write_operator_csv(const std::filesystem::path& path, const BlockOperator& op);

// columns: epoch,rel_error,residual (epochs rendered to 3 decimals)
std::string trajectory_csv(const RunRecord& record);

// one row per study cell; schema documented in the README
std::string study_csv(const std::vector<study::CellResult>& cells);

std::string mean_trajectory_csv(const study::ReplicateSummary& summary);

// temp file + rename; never leaves a partial file at `path`
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

std::string format_double(double v);

const char* version();  // git describe at configure time

}  // namespace lininv::io
