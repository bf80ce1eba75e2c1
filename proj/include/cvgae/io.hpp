//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cvgae/molgraph.hpp"

namespace cvgae {

class SdfError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MoleculeRecord {
  MolecularGraph graph;
  Conformation conformation;
};

struct RejectedRecord {
  enum class Kind { kParseError, kFiltered };

  std::size_t record_index = 0;  // 0-based position in the input
  std::string id;
  Kind kind = Kind::kParseError;
  std::string reason;
};

struct SdfParseResult {
  std::vector<MoleculeRecord> accepted;
  std::vector<RejectedRecord> rejected;
};

/// Parses a concatenation of V2000 molblocks separated by "$$$$" lines.
///
/// A malformed record never aborts the batch; it is reported in `rejected`.
/// Records with a disconnected bond graph are always rejected; @p profile
/// adds the heavy-atom and element filters. Coordinates are the
/// correctly-rounded doubles of the decimal fields in the file.
SdfParseResult parse_sdf(std::string_view text,
                         const FilterProfile *profile = nullptr);

/// Parses exactly one molblock (no "$$$$"). Throws SdfError on any defect.
MoleculeRecord parse_molblock(std::string_view block);

/// V2000 writer with %10.4f coordinates.
void write_molblock(std::ostream &os, const MolecularGraph &graph,
                    const Conformation &conf);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// One conformation block of an extended-XYZ style file.
struct XyzBlock {
  std::string id;
  std::optional<std::size_t> sample;
  std::vector<std::string> elements;
  Conformation conformation;
};

/// Reads consecutive XYZ blocks: atom count, a comment line and one
/// "element x y z" line per atom. A comment of the form "<id> sample=<k>"
/// populates id and sample; any other comment is kept whole as the id.
std::vector<XyzBlock> read_xyz(std::string_view text);

void write_xyz_block(std::ostream &os, const XyzBlock &block);

std::string read_file(const std::string &path);

}  // namespace cvgae
