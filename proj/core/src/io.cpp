#include "lininv/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "binary container assumes little-endian");

namespace lininv::io {

namespace {

constexpr char kMatMagic[8] = {'L', 'I', 'N', 'V', 'M', 'A', 'T', '1'};
constexpr char kVecMagic[8] = {'L', 'I', 'N', 'V', 'V', 'E', 'C', '1'};

void put_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

}  // namespace

void write_operator_binary(const std::filesystem::path& path, const BlockOperator& op) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(kMatMagic, sizeof kMatMagic);
    put_u64(f, static_cast<std::uint64_t>(op.rows()));
    put_u64(f, static_cast<std::uint64_t>(op.cols()));
    put_u64(f, static_cast<std::uint64_t>(op.block_count()));
    for (Eigen::Index sz : op.partition()) put_u64(f, static_cast<std::uint64_t>(sz));
    f.write(reinterpret_cast<const char*>(op.entries().data()),
            static_cast<std::streamsize>(sizeof(double)) * op.rows() * op.cols());
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

BlockOperator read_operator_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof magic);
  if (std::memcmp(magic, kMatMagic, sizeof magic) != 0)
    throw std::runtime_error("bad operator magic in " + path.string());
  const auto rows = static_cast<Eigen::Index>(get_u64(f));
  const auto cols = static_cast<Eigen::Index>(get_u64(f));
  const auto nblk = static_cast<Eigen::Index>(get_u64(f));
  std::vector<Eigen::Index> partition(static_cast<std::size_t>(nblk));
  for (auto& sz : partition) sz = static_cast<Eigen::Index>(get_u64(f));
  Matrix entries(rows, cols);
  f.read(reinterpret_cast<char*>(entries.data()),
         static_cast<std::streamsize>(sizeof(double)) * rows * cols);
  if (!f) throw std::runtime_error("truncated operator file " + path.string());
  return BlockOperator(std::move(entries), std::move(partition));
}

void write_vector_binary(const std::filesystem::path& path, const Vector& v) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(kVecMagic, sizeof kVecMagic);
    put_u64(f, static_cast<std::uint64_t>(v.size()));
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double)) * v.size());
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Vector read_vector_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof magic);
  if (std::memcmp(magic, kVecMagic, sizeof magic) != 0)
    throw std::runtime_error("bad vector magic in " + path.string());
  Vector v(static_cast<Eigen::Index>(get_u64(f)));
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(sizeof(double)) * v.size());
  if (!f) throw std::runtime_error("truncated vector file " + path.string());
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string format_epoch(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

void write_operator_csv(const std::filesystem::path& path, const BlockOperator& op) {
  std::string out;
  out.reserve(static_cast<std::size_t>(op.rows() * op.cols()) * 8);
  for (Eigen::Index i = 0; i < op.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.cols(); ++j) {
      if (j) out += ',';
      out += format_double(op.entries()(i, j));
    }
    out += '\n';
  }
  atomic_write_text(path, out);
}

std::string trajectory_csv(const RunRecord& record) {
  std::string out = "epoch,rel_error,residual\n";
  for (const auto& pt : record.trajectory) {
    out += format_epoch(pt.epoch);
    out += ',';
    out += format_double(pt.rel_error);
    out += ',';
    out += format_double(pt.residual);
    out += '\n';
  }
  return out;
}

std::string mean_trajectory_csv(const study::ReplicateSummary& summary) {
  std::string out = "epoch,rel_error_rms,residual_mean\n";
  for (const auto& pt : summary.mean_trajectory) {
    out += format_epoch(pt.epoch);
    out += ',';
    out += format_double(pt.rel_error);
    out += ',';
    out += format_double(pt.residual);
    out += '\n';
  }
  return out;
}

std::string study_csv(const std::vector<study::CellResult>& cells) {
  std::string out =
      "problem,size,method,nu,eps,delta,c0,M,stopping,reps,e_star,e_star_sd,k_star,plateau_error,"
      "diverged\n";
  for (const auto& c : cells) {
    out += c.problem;
    out += ',' + std::to_string(c.size);
    out += ',' + c.method;
    out += ',' + format_double(c.nu);
    out += ',' + format_double(c.eps);
    out += ',' + format_double(c.delta);
    out += ',' + format_double(c.c0);
    out += ',' + std::to_string(c.M);
    out += ',' + c.stopping;
    out += ',' + std::to_string(c.summary.reps);
    out += ',' + format_double(c.e_star);
    out += ',' + format_double(c.e_star_sd);
    out += ',' + format_epoch(c.k_star);
    out += ',' + format_double(c.plateau_error);
    out += ',' + std::to_string(c.diverged);
    out += '\n';
  }
  return out;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lininv::io
