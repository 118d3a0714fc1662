#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evret/errors.hpp"
#include "evret/identification.hpp"
#include "evret/matrix.hpp"
#include "evret/numeric.hpp"
#include "evret/synth.hpp"

namespace evret {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  out << content;
  if (!out) throw input_error("write failed for " + path.string());
}

struct CsvMatrix {
  std::vector<std::string> columns;
  Matrix values;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::vector<std::string_view> csv_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

// Headered CSV of doubles, shortest round-trip formatting. Errors name the
// file and the 1-based row.
inline std::string write_csv(const Matrix& m, const std::vector<std::string>& columns) {
  if (columns.size() != m.cols()) throw input_error("csv: header width mismatch");
  std::ostringstream out;
  for (std::size_t j = 0; j < columns.size(); ++j)
    out << (j ? "," : "") << columns[j];
  out << "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << double_to_string(m(i, j));
    out << "\n";
  }
  return out.str();
}

inline CsvMatrix read_csv(std::string_view text, const std::string& name) {
  auto lines = detail::csv_lines(text);
  if (lines.empty()) throw input_error(name + ": empty file");
  CsvMatrix out;
  for (auto col : detail::split_csv_line(lines[0])) {
    if (col.empty()) throw input_error(name + ": empty column name in header");
    out.columns.emplace_back(col);
  }
  const std::size_t cols = out.columns.size();
  out.values = Matrix(lines.size() - 1, cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = detail::split_csv_line(lines[r]);
    if (fields.size() != cols)
      throw input_error(name + " row " + std::to_string(r) + ": expected " +
                        std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < cols; ++j) {
      double v;
      if (!parse_double(fields[j], v))
        throw input_error(name + " row " + std::to_string(r) + ": bad number '" +
                          std::string(fields[j]) + "'");
      out.values(r - 1, j) = v;
    }
  }
  return out;
}

inline std::vector<std::string> indexed_columns(const char* prefix, std::size_t n) {
  std::vector<std::string> cols(n);
  for (std::size_t j = 0; j < n; ++j) cols[j] = prefix + std::to_string(j);
  return cols;
}

// Instance directory layout:
//   frame_sim.csv, clip_sim.csv   queries x videos, columns v0..v{K-1}
//   labels.csv                    single column "label", video index per query
//   planted_truth.csv             single column "category" (optional)
//   clip_query_<video>.csv        clips x positives, columns q<global id> (optional)
inline void write_instance(const std::filesystem::path& dir, const Instance& inst) {
  inst.validate();
  std::filesystem::create_directories(dir);
  auto vcols = indexed_columns("v", inst.n_videos());
  write_file(dir / "frame_sim.csv", write_csv(inst.s_f, vcols));
  write_file(dir / "clip_sim.csv", write_csv(inst.s_c, vcols));

  std::ostringstream labels;
  labels << "label\n";
  for (std::size_t l : inst.labels) labels << l << "\n";
  write_file(dir / "labels.csv", labels.str());

  if (!inst.planted_truth.empty()) {
    std::ostringstream truth;
    truth << "category\n";
    for (auto c : inst.planted_truth) truth << to_string(c) << "\n";
    write_file(dir / "planted_truth.csv", truth.str());
  }

  for (const auto& block : inst.clip_query) {
    std::vector<std::string> qcols(block.query_ids.size());
    for (std::size_t j = 0; j < qcols.size(); ++j)
      qcols[j] = "q" + std::to_string(block.query_ids[j]);
    write_file(dir / ("clip_query_" + std::to_string(block.video) + ".csv"),
               write_csv(block.sims, qcols));
  }
}

namespace detail {

inline std::size_t parse_index(std::string_view s, const std::string& ctx) {
  std::size_t v;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw input_error(ctx + ": bad index '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline Instance read_instance(const std::filesystem::path& dir) {
  Instance inst;
  auto frame = read_csv(read_file(dir / "frame_sim.csv"), "frame_sim.csv");
  auto clip = read_csv(read_file(dir / "clip_sim.csv"), "clip_sim.csv");
  inst.s_f = std::move(frame.values);
  inst.s_c = std::move(clip.values);

  const std::string labels_text = read_file(dir / "labels.csv");
  auto label_lines = detail::csv_lines(labels_text);
  if (label_lines.empty() || label_lines[0] != "label")
    throw input_error("labels.csv: expected header 'label'");
  for (std::size_t r = 1; r < label_lines.size(); ++r)
    inst.labels.push_back(
        detail::parse_index(label_lines[r], "labels.csv row " + std::to_string(r)));

  if (std::filesystem::exists(dir / "planted_truth.csv")) {
    const std::string truth_text = read_file(dir / "planted_truth.csv");
    auto truth_lines = detail::csv_lines(truth_text);
    if (truth_lines.empty() || truth_lines[0] != "category")
      throw input_error("planted_truth.csv: expected header 'category'");
    for (std::size_t r = 1; r < truth_lines.size(); ++r) {
      std::string_view v = truth_lines[r];
      if (v == "precise") inst.planted_truth.push_back(QueryCategory::Precise);
      else if (v == "polysemous") inst.planted_truth.push_back(QueryCategory::Polysemous);
      else if (v == "under_determined")
        inst.planted_truth.push_back(QueryCategory::UnderDetermined);
      else
        throw input_error("planted_truth.csv row " + std::to_string(r) +
                          ": unknown category '" + std::string(v) + "'");
    }
  }

  std::vector<std::pair<std::size_t, std::filesystem::path>> blocks;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("clip_query_", 0) != 0 || entry.path().extension() != ".csv") continue;
    std::string idx = name.substr(11, name.size() - 11 - 4);
    blocks.emplace_back(detail::parse_index(idx, name), entry.path());
  }
  std::sort(blocks.begin(), blocks.end());
  for (const auto& [video, path] : blocks) {
    auto csv = read_csv(read_file(path), path.filename().string());
    ClipQueryBlock block;
    block.video = video;
    for (const auto& col : csv.columns) {
      if (col.empty() || col[0] != 'q')
        throw input_error(path.filename().string() + ": column '" + col +
                          "' should name a query like q12");
      block.query_ids.push_back(
          detail::parse_index(std::string_view(col).substr(1), path.filename().string()));
    }
    block.sims = std::move(csv.values);
    inst.clip_query.push_back(std::move(block));
  }

  inst.validate();
  return inst;
}

}  // namespace evret
