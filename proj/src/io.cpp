// Copyright 2026 The mamba Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mamba/io.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mamba/errors.hpp"

namespace mamba {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw InvalidArgument("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
  }
  return v;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string format_double(double value) { return fmt::format("{}", value); }

void write_chain_csv(std::ostream& out, const Chain& chain) {
  const std::size_t d = chain.dim();
  out << "iteration,wall_time_sec";
  for (std::size_t i = 0; i < d; ++i) out << ",theta_" << i;
  for (std::size_t i = 0; i < d; ++i) out << ",grad_" << i;
  out << '\n';
  for (const auto& s : chain.samples) {
    out << s.iteration << ',' << format_double(s.wall_time_sec);
    for (Eigen::Index i = 0; i < s.theta.size(); ++i) out << ',' << format_double(s.theta[i]);
    for (Eigen::Index i = 0; i < s.grad.size(); ++i) out << ',' << format_double(s.grad[i]);
    out << '\n';
  }
}

void write_chain_csv(const std::filesystem::path& path, const Chain& chain) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_chain_csv(out, chain);
}

Chain read_chain_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("chain file is empty");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "iteration" || header[1] != "wall_time_sec" ||
      (header.size() - 2) % 2 != 0) {
    throw InvalidArgument("chain file header must be iteration,wall_time_sec,theta_*,grad_*");
  }
  const std::size_t d = (header.size() - 2) / 2;
  for (std::size_t i = 0; i < d; ++i) {
    if (header[2 + i] != "theta_" + std::to_string(i) ||
        header[2 + d + i] != "grad_" + std::to_string(i)) {
      throw InvalidArgument("chain file header has unexpected column names");
    }
  }

  Chain chain;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    Sample s;
    s.iteration = static_cast<std::uint64_t>(std::stoull(cells[0]));
    s.wall_time_sec = parse_number(cells[1], line_no);
    s.theta.resize(static_cast<Eigen::Index>(d));
    s.grad.resize(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      s.theta[static_cast<Eigen::Index>(i)] = parse_number(cells[2 + i], line_no);
      s.grad[static_cast<Eigen::Index>(i)] = parse_number(cells[2 + d + i], line_no);
    }
    if (!chain.samples.empty() && s.iteration <= chain.samples.back().iteration) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": iterations must increase");
    }
    chain.samples.push_back(std::move(s));
  }
  if (!chain.samples.empty()) chain.total_iterations = chain.samples.back().iteration;
  return chain;
}

Chain read_chain_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open chain file " + path.string());
  return read_chain_csv(in);
}

void write_rounds_csv(std::ostream& out, const std::vector<RoundRecord>& rounds,
                      const std::vector<Arm>& arms) {
  std::map<std::size_t, const Arm*> by_id;
  for (const auto& a : arms) by_id[a.arm_id] = &a;
  out << "round,arm_id,sampler,log10_h,batch_fraction,leapfrog,budget,reward,pruned\n";
  for (const auto& round : rounds) {
    for (const auto& rec : round.arms) {
      const Arm& arm = *by_id.at(rec.arm_id);
      out << round.round << ',' << rec.arm_id << ',' << arm.config.label() << ','
          << format_double(arm.log10_step) << ',' << format_double(arm.config.batch_fraction)
          << ',' << arm.config.leapfrog << ',' << format_double(rec.budget) << ','
          << format_double(rec.reward) << ',' << (rec.pruned ? 1 : 0) << '\n';
    }
  }
}

void write_curve_csv(std::ostream& out, const RewardCurve& curve) {
  out << "checkpoint,mean,lower,upper\n";
  for (const auto& p : curve.points) {
    out << format_double(p.checkpoint);
    if (p.missing()) {
      out << ",,,\n";
    } else {
      out << ',' << format_double(p.mean) << ',' << format_double(p.lower) << ','
          << format_double(p.upper) << '\n';
    }
  }
}

void write_table_csv(std::ostream& out, const std::vector<ComparisonCell>& table) {
  out << "tuner,sampler,ksd,xi_std,n_samples\n";
  for (const auto& c : table) {
    out << c.tuner << ',' << c.sampler << ',' << optional_field(c.ksd) << ','
        << optional_field(c.xi_std) << ',' << c.n_samples << '\n';
  }
}

void write_table_text(std::ostream& out, const std::vector<ComparisonCell>& table) {
  fmt::print(out, "{:<12} {:<10} {:>8} {:>8} {:>12} {:>12} {:>10}\n", "tuner", "sampler",
             "log10_h", "batch", "ksd", "xi_std", "n_samples");
  for (const auto& c : table) {
    if (!c.error.empty()) {
      fmt::print(out, "{:<12} {:<10} failed: {}\n", c.tuner, c.sampler, c.error);
      continue;
    }
    fmt::print(out, "{:<12} {:<10} {:>8.2f} {:>8.3g} {:>12} {:>12} {:>10}\n", c.tuner,
               c.sampler, std::log10(c.config.step_size), c.config.batch_fraction,
               c.ksd ? fmt::format("{:.5g}", *c.ksd) : "-",
               c.xi_std ? fmt::format("{:.4g}", *c.xi_std) : "-", c.n_samples);
  }
}

ReferenceMoments read_reference_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open reference file " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"mean", "std"}) {
    throw InvalidArgument(path.string() + ": header must be mean,std");
  }
  std::vector<double> mean, sd;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != 2) throw InvalidArgument(path.string() + ": expected 2 fields");
    mean.push_back(parse_number(cells[0], line_no));
    sd.push_back(parse_number(cells[1], line_no));
  }
  ReferenceMoments ref;
  ref.source = ReferenceMoments::Source::kFile;
  ref.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  ref.std = Eigen::Map<const Vector>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  ref.validate();
  return ref;
}

}  // namespace mamba
