//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/elements.hpp"

#include <array>
#include <cctype>
#include <string>

namespace cvgae {
namespace {
  constexpr std::array kElements = {
    ElementInfo { "H", 1, 1.008 },      ElementInfo { "He", 2, 4.0026 },
    ElementInfo { "Li", 3, 6.94 },      ElementInfo { "Be", 4, 9.0122 },
    ElementInfo { "B", 5, 10.81 },      ElementInfo { "C", 6, 12.011 },
    ElementInfo { "N", 7, 14.007 },     ElementInfo { "O", 8, 15.999 },
    ElementInfo { "F", 9, 18.998 },     ElementInfo { "Ne", 10, 20.180 },
    ElementInfo { "Na", 11, 22.990 },   ElementInfo { "Mg", 12, 24.305 },
    ElementInfo { "Al", 13, 26.982 },   ElementInfo { "Si", 14, 28.085 },
    ElementInfo { "P", 15, 30.974 },    ElementInfo { "S", 16, 32.06 },
    ElementInfo { "Cl", 17, 35.45 },    ElementInfo { "Ar", 18, 39.948 },
    ElementInfo { "K", 19, 39.098 },    ElementInfo { "Ca", 20, 40.078 },
    ElementInfo { "Sc", 21, 44.956 },   ElementInfo { "Ti", 22, 47.867 },
    ElementInfo { "V", 23, 50.942 },    ElementInfo { "Cr", 24, 51.996 },
    ElementInfo { "Mn", 25, 54.938 },   ElementInfo { "Fe", 26, 55.845 },
    ElementInfo { "Co", 27, 58.933 },   ElementInfo { "Ni", 28, 58.693 },
    ElementInfo { "Cu", 29, 63.546 },   ElementInfo { "Zn", 30, 65.38 },
    ElementInfo { "Ga", 31, 69.723 },   ElementInfo { "Ge", 32, 72.630 },
    ElementInfo { "As", 33, 74.922 },   ElementInfo { "Se", 34, 78.971 },
    ElementInfo { "Br", 35, 79.904 },   ElementInfo { "Kr", 36, 83.798 },
    ElementInfo { "Rb", 37, 85.468 },   ElementInfo { "Sr", 38, 87.62 },
    ElementInfo { "Y", 39, 88.906 },    ElementInfo { "Zr", 40, 91.224 },
    ElementInfo { "Nb", 41, 92.906 },   ElementInfo { "Mo", 42, 95.95 },
    ElementInfo { "Tc", 43, 97.907 },   ElementInfo { "Ru", 44, 101.07 },
    ElementInfo { "Rh", 45, 102.91 },   ElementInfo { "Pd", 46, 106.42 },
    ElementInfo { "Ag", 47, 107.87 },   ElementInfo { "Cd", 48, 112.41 },
    ElementInfo { "In", 49, 114.82 },   ElementInfo { "Sn", 50, 118.71 },
    ElementInfo { "Sb", 51, 121.76 },   ElementInfo { "Te", 52, 127.60 },
    ElementInfo { "I", 53, 126.90 },    ElementInfo { "Xe", 54, 131.29 },
    ElementInfo { "Cs", 55, 132.91 },   ElementInfo { "Ba", 56, 137.33 },
    ElementInfo { "La", 57, 138.91 },   ElementInfo { "Ce", 58, 140.12 },
    ElementInfo { "Pr", 59, 140.91 },   ElementInfo { "Nd", 60, 144.24 },
    ElementInfo { "Pm", 61, 144.91 },   ElementInfo { "Sm", 62, 150.36 },
    ElementInfo { "Eu", 63, 151.96 },   ElementInfo { "Gd", 64, 157.25 },
    ElementInfo { "Tb", 65, 158.93 },   ElementInfo { "Dy", 66, 162.50 },
    ElementInfo { "Ho", 67, 164.93 },   ElementInfo { "Er", 68, 167.26 },
    ElementInfo { "Tm", 69, 168.93 },   ElementInfo { "Yb", 70, 173.05 },
    ElementInfo { "Lu", 71, 174.97 },   ElementInfo { "Hf", 72, 178.49 },
    ElementInfo { "Ta", 73, 180.95 },   ElementInfo { "W", 74, 183.84 },
    ElementInfo { "Re", 75, 186.21 },   ElementInfo { "Os", 76, 190.23 },
    ElementInfo { "Ir", 77, 192.22 },   ElementInfo { "Pt", 78, 195.08 },
    ElementInfo { "Au", 79, 196.97 },   ElementInfo { "Hg", 80, 200.59 },
    ElementInfo { "Tl", 81, 204.38 },   ElementInfo { "Pb", 82, 207.2 },
    ElementInfo { "Bi", 83, 208.98 },   ElementInfo { "Po", 84, 208.98 },
    ElementInfo { "At", 85, 209.99 },   ElementInfo { "Rn", 86, 222.02 },
    ElementInfo { "Fr", 87, 223.02 },   ElementInfo { "Ra", 88, 226.03 },
    ElementInfo { "Ac", 89, 227.03 },   ElementInfo { "Th", 90, 232.04 },
    ElementInfo { "Pa", 91, 231.04 },   ElementInfo { "U", 92, 238.03 },
    ElementInfo { "Np", 93, 237.05 },   ElementInfo { "Pu", 94, 244.06 },
    ElementInfo { "Am", 95, 243.06 },
  };
}  // namespace

std::optional<ElementInfo> find_element(std::string_view symbol) {
  for (const auto &e: kElements)
    if (e.symbol == symbol)
      return e;
  return std::nullopt;
}

std::optional<ElementInfo> find_element_relaxed(std::string_view symbol) {
  if (symbol.empty())
    return std::nullopt;
  std::string norm(symbol);
  norm[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(norm[0])));
  for (std::size_t i = 1; i < norm.size(); ++i)
    norm[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(norm[i])));
  return find_element(norm);
}

}  // namespace cvgae
