#pragma once

#include <filesystem>
#include <iosfwd>

#include "epifmqa/mdr.hpp"

namespace epifmqa {

// Tab-separated: a header of locus names ending in the literal column
// `Class`, then one row per sample of genotype codes 0/1/2 and class
// 0 (control) / 1 (case). Errors are ParseError carrying the 1-based line.

GenotypeDataset parse_dataset(std::istream& in);
GenotypeDataset read_dataset(const std::filesystem::path& path);

void write_dataset(std::ostream& out, const GenotypeDataset& data);
void write_dataset(const std::filesystem::path& path, const GenotypeDataset& data);

}  // namespace epifmqa
