#include "epifmqa/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "epifmqa/errors.hpp"

namespace epifmqa {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

GenotypeDataset parse_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("dataset: empty input, expected a header", 1);
  ++line_no;
  strip_cr(line);
  auto header = split_tabs(line);
  if (header.empty() || header.back() != "Class") {
    throw ParseError("dataset: header must end with a 'Class' column", line_no);
  }
  header.pop_back();
  if (header.empty()) throw ParseError("dataset: header names no loci", line_no);
  const std::size_t n_loci = header.size();

  std::vector<std::uint8_t> rows;
  std::vector<std::uint8_t> labels;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != n_loci + 1) {
      throw ParseError("dataset: expected " + std::to_string(n_loci + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t l = 0; l < n_loci; ++l) {
      const auto& f = fields[l];
      if (f.size() != 1 || f[0] < '0' || f[0] > '2') {
        throw ParseError("dataset: genotype '" + f + "' in column " + header[l] +
                             " is not 0, 1 or 2",
                         line_no);
      }
      rows.push_back(static_cast<std::uint8_t>(f[0] - '0'));
    }
    const auto& c = fields.back();
    if (c != "0" && c != "1") {
      throw ParseError("dataset: class '" + c + "' is not 0 or 1", line_no);
    }
    labels.push_back(c == "1" ? 1 : 0);
  }
  try {
    return GenotypeDataset(n_loci, rows, std::move(labels), std::move(header));
  } catch (const ContractViolation& e) {
    throw ParseError(e.what(), 0);
  }
}

GenotypeDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const GenotypeDataset& data) {
  for (const auto& name : data.locus_names()) out << name << '\t';
  out << "Class\n";
  std::string row;
  for (std::size_t s = 0; s < data.n_samples(); ++s) {
    row.clear();
    for (std::size_t l = 0; l < data.n_loci(); ++l) {
      row += static_cast<char>('0' + data.genotype(s, l));
      row += '\t';
    }
    row += data.is_case(s) ? '1' : '0';
    row += '\n';
    out << row;
  }
}

void write_dataset(const std::filesystem::path& path, const GenotypeDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  write_dataset(out, data);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace epifmqa
