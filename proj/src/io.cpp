//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cvgae/elements.hpp"

namespace cvgae {
namespace {
  std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
      s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.remove_suffix(1);
    return s;
  }

  std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string_view::npos) {
        if (start < text.size())
          lines.push_back(text.substr(start));
        break;
      }
      std::string_view line = text.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
      lines.push_back(line);
      start = nl + 1;
    }
    return lines;
  }

  std::string_view column(std::string_view line, std::size_t begin,
                          std::size_t len) {
    if (begin >= line.size())
      return {};
    return trim(line.substr(begin, len));
  }

  template <class T>
  std::optional<T> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+')
      s.remove_prefix(1);
    T value {};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      return std::nullopt;
    return value;
  }

  int charge_from_code(int code) {
    switch (code) {
    case 1:
      return 3;
    case 2:
      return 2;
    case 3:
      return 1;
    case 5:
      return -1;
    case 6:
      return -2;
    case 7:
      return -3;
    default:
      return 0;
    }
  }

  std::string sanitize_id(std::string_view name) {
    std::string id(trim(name));
    for (char &c: id)
      if (std::isspace(static_cast<unsigned char>(c)))
        c = '_';
    return id;
  }

  std::vector<std::string_view> split_tokens(std::string_view s) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
        ++i;
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])))
        ++j;
      if (j > i)
        tokens.push_back(s.substr(i, j - i));
      i = j;
    }
    return tokens;
  }
}  // namespace

MoleculeRecord parse_molblock(std::string_view block) {
  const auto lines = split_lines(block);
  if (lines.size() < 4)
    throw SdfError("truncated block: missing header or counts line");

  MoleculeRecord rec;
  rec.graph.id = sanitize_id(lines[0]);

  const std::string_view counts = lines[3];
  if (counts.find("V3000") != std::string_view::npos)
    throw SdfError("V3000 molblocks are not supported");
  auto natoms = parse_number<int>(column(counts, 0, 3));
  auto nbonds = parse_number<int>(column(counts, 3, 3));
  if (!natoms || !nbonds || *natoms < 0 || *nbonds < 0)
    throw SdfError("malformed counts line: '" + std::string(counts) + "'");

  const std::size_t atom_begin = 4;
  const std::size_t bond_begin = atom_begin + static_cast<std::size_t>(*natoms);
  const std::size_t props_begin = bond_begin + static_cast<std::size_t>(*nbonds);

  rec.graph.atoms.reserve(static_cast<std::size_t>(*natoms));
  rec.conformation.coords.reserve(static_cast<std::size_t>(*natoms));
  for (std::size_t k = atom_begin; k < bond_begin; ++k) {
    const std::size_t atom_no = k - atom_begin + 1;
    if (k >= lines.size() || lines[k].starts_with("M  "))
      throw SdfError("counts line declares " + std::to_string(*natoms)
                     + " atoms but block has " + std::to_string(atom_no - 1)
                     + " atom lines");
    const std::string_view line = lines[k];
    auto x = parse_number<double>(column(line, 0, 10));
    auto y = parse_number<double>(column(line, 10, 10));
    auto z = parse_number<double>(column(line, 20, 10));
    std::string_view symbol = column(line, 31, 3);
    if (!x || !y || !z || symbol.empty())
      throw SdfError("malformed atom line " + std::to_string(atom_no) + ": '"
                     + std::string(line) + "'");
    auto info = find_element_relaxed(symbol);
    if (!info)
      throw SdfError("unknown element symbol '" + std::string(symbol) + "'");
    Atom atom;
    atom.element = std::string(info->symbol);
    if (auto code = parse_number<int>(column(line, 36, 3)))
      atom.formal_charge = charge_from_code(*code);
    rec.graph.atoms.push_back(std::move(atom));
    rec.conformation.coords.push_back({ *x, *y, *z });
  }

  const std::size_t m = rec.graph.atoms.size();
  std::vector<std::vector<bool>> seen(m, std::vector<bool>(m, false));
  for (std::size_t k = bond_begin; k < props_begin; ++k) {
    const std::size_t bond_no = k - bond_begin + 1;
    if (k >= lines.size() || lines[k].starts_with("M  "))
      throw SdfError("counts line declares " + std::to_string(*nbonds)
                     + " bonds but block has " + std::to_string(bond_no - 1)
                     + " bond lines");
    const std::string_view line = lines[k];
    auto a = parse_number<int>(column(line, 0, 3));
    auto b = parse_number<int>(column(line, 3, 3));
    auto type = parse_number<int>(column(line, 6, 3));
    if (!a || !b || !type)
      throw SdfError("malformed bond line " + std::to_string(bond_no));
    if (*a < 1 || *b < 1 || static_cast<std::size_t>(*a) > m
        || static_cast<std::size_t>(*b) > m)
      throw SdfError("bond " + std::to_string(bond_no)
                     + " references an atom index out of range");
    if (*a == *b)
      throw SdfError("bond " + std::to_string(bond_no) + " is a self-loop");
    if (*type < 1 || *type > 4)
      throw SdfError("unsupported bond type " + std::to_string(*type));
    const auto i = static_cast<std::size_t>(*a - 1);
    const auto j = static_cast<std::size_t>(*b - 1);
    if (seen[i][j])
      throw SdfError("duplicate bond between atoms " + std::to_string(*a)
                     + " and " + std::to_string(*b));
    seen[i][j] = seen[j][i] = true;
    rec.graph.bonds.push_back(Bond { i, j, static_cast<BondOrder>(*type - 1) });
  }

  bool charges_reset = false;
  bool saw_end = false;
  for (std::size_t k = props_begin; k < lines.size(); ++k) {
    const std::string_view line = lines[k];
    if (line.starts_with("M  END")) {
      saw_end = true;
      break;
    }
    if (!line.starts_with("M  CHG"))
      continue;
    // An M  CHG line supersedes every charge given in the atom block.
    if (!charges_reset) {
      for (auto &atom: rec.graph.atoms)
        atom.formal_charge = 0;
      charges_reset = true;
    }
    auto tokens = split_tokens(line.substr(6));
    auto n = tokens.empty() ? std::nullopt : parse_number<int>(tokens[0]);
    if (!n || tokens.size() < 1 + 2 * static_cast<std::size_t>(*n))
      throw SdfError("malformed M  CHG line");
    for (int q = 0; q < *n; ++q) {
      auto idx = parse_number<int>(tokens[1 + 2 * q]);
      auto chg = parse_number<int>(tokens[2 + 2 * q]);
      if (!idx || !chg || *idx < 1 || static_cast<std::size_t>(*idx) > m)
        throw SdfError("M  CHG references an atom index out of range");
      rec.graph.atoms[static_cast<std::size_t>(*idx - 1)].formal_charge = *chg;
    }
  }
  if (!saw_end)
    throw SdfError("truncated block: missing 'M  END'");
  return rec;
}

SdfParseResult parse_sdf(std::string_view text, const FilterProfile *profile) {
  SdfParseResult result;
  const auto lines = split_lines(text);
  std::size_t record = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    bool blank = true;
    for (std::size_t k = start; k < end; ++k)
      if (!trim(lines[k]).empty())
        blank = false;
    if (blank)
      return;
    std::string block;
    for (std::size_t k = start; k < end; ++k) {
      block.append(lines[k]);
      block.push_back('\n');
    }
    const std::size_t idx = record++;
    std::string id = lines[start].empty() ? std::string() : sanitize_id(lines[start]);
    try {
      MoleculeRecord rec = parse_molblock(block);
      if (rec.graph.id.empty())
        rec.graph.id = "mol" + std::to_string(idx + 1);
      FilterResult verdict;
      if (profile)
        verdict = filter_molecule(rec.graph, *profile);
      else if (!rec.graph.is_connected())
        verdict = { false, "disconnected: "
                               + std::to_string(rec.graph.connected_components())
                               + " fragments" };
      if (!verdict.accepted) {
        result.rejected.push_back({ idx, rec.graph.id,
                                    RejectedRecord::Kind::kFiltered,
                                    verdict.reason });
        return;
      }
      result.accepted.push_back(std::move(rec));
    } catch (const SdfError &e) {
      result.rejected.push_back(
          { idx, id, RejectedRecord::Kind::kParseError, e.what() });
    }
  };
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].starts_with("$$$$")) {
      flush(k);
      start = k + 1;
    }
  }
  flush(lines.size());
  return result;
}

void write_molblock(std::ostream &os, const MolecularGraph &graph,
                    const Conformation &conf) {
  char buf[128];
  os << graph.id << "\n  cvgae\n\n";
  std::snprintf(buf, sizeof buf, "%3zu%3zu  0  0  0  0  0  0  0  0999 V2000\n",
                graph.atom_count(), graph.bonds.size());
  os << buf;
  for (std::size_t i = 0; i < graph.atom_count(); ++i) {
    const auto &a = graph.atoms[i];
    int code = 0;
    switch (a.formal_charge) {
    case 3:
      code = 1;
      break;
    case 2:
      code = 2;
      break;
    case 1:
      code = 3;
      break;
    case -1:
      code = 5;
      break;
    case -2:
      code = 6;
      break;
    case -3:
      code = 7;
      break;
    default:
      break;
    }
    std::snprintf(buf, sizeof buf,
                  "%10.4f%10.4f%10.4f %-3s 0%3d  0  0  0  0  0  0  0  0  0  0\n",
                  conf.coords[i][0], conf.coords[i][1], conf.coords[i][2],
                  a.element.c_str(), code);
    os << buf;
  }
  for (const auto &b: graph.bonds) {
    std::snprintf(buf, sizeof buf, "%3zu%3zu%3d  0\n", b.begin + 1, b.end + 1,
                  static_cast<int>(b.order) + 1);
    os << buf;
  }
  os << "M  END\n$$$$\n";
}

std::string format_double(double v) {
  std::array<char, 64> buf {};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc())
    throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

std::vector<XyzBlock> read_xyz(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<XyzBlock> blocks;
  std::size_t k = 0;
  while (k < lines.size()) {
    if (trim(lines[k]).empty()) {
      ++k;
      continue;
    }
    auto count = parse_number<std::size_t>(lines[k]);
    if (!count)
      throw std::runtime_error("xyz: expected atom count at line "
                               + std::to_string(k + 1));
    if (k + 1 + *count >= lines.size())
      throw std::runtime_error("xyz: truncated block at line "
                               + std::to_string(k + 1));
    XyzBlock block;
    const std::string_view comment = trim(lines[k + 1]);
    auto tokens = split_tokens(comment);
    if (tokens.size() == 2 && tokens[1].starts_with("sample=")) {
      block.id = std::string(tokens[0]);
      block.sample = parse_number<std::size_t>(tokens[1].substr(7));
      if (!block.sample)
        throw std::runtime_error("xyz: malformed sample index");
    } else {
      block.id = std::string(comment);
    }
    for (std::size_t a = 0; a < *count; ++a) {
      const std::size_t ln = k + 2 + a;
      auto tok = split_tokens(lines[ln]);
      if (tok.size() < 4)
        throw std::runtime_error("xyz: malformed atom line "
                                 + std::to_string(ln + 1));
      auto x = parse_number<double>(tok[1]);
      auto y = parse_number<double>(tok[2]);
      auto z = parse_number<double>(tok[3]);
      if (!x || !y || !z)
        throw std::runtime_error("xyz: malformed coordinates at line "
                                 + std::to_string(ln + 1));
      block.elements.emplace_back(tok[0]);
      block.conformation.coords.push_back({ *x, *y, *z });
    }
    blocks.push_back(std::move(block));
    k += 2 + *count;
  }
  return blocks;
}

void write_xyz_block(std::ostream &os, const XyzBlock &block) {
  os << block.conformation.size() << '\n' << block.id;
  if (block.sample)
    os << " sample=" << *block.sample;
  os << '\n';
  for (std::size_t i = 0; i < block.conformation.size(); ++i) {
    const auto &x = block.conformation.coords[i];
    os << block.elements.at(i) << ' ' << format_double(x[0]) << ' '
       << format_double(x[1]) << ' ' << format_double(x[2]) << '\n';
  }
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cvgae
