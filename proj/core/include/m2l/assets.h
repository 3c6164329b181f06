/**
 * @file assets.h
 * @brief Locations of the bundled data files.
 */

#ifndef M2L_ASSETS_H
#define M2L_ASSETS_H

#include <string>

namespace m2l {

/// $M2L_DATA_DIR when set, otherwise the directory configured at build time
/// (the source tree for build-tree binaries, <prefix>/share/m2l once installed).
std::string default_data_dir();

struct AssetPaths {
  std::string lexicon;   ///< lexicon.tsv
  std::string words;     ///< words.tsv
  std::string rhymes;    ///< rhymes.tsv
  std::string segdict;   ///< segdict.txt

  static AssetPaths in(const std::string& dir);
};

}  // namespace m2l

#endif  // M2L_ASSETS_H
