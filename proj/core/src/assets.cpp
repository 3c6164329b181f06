#include "m2l/assets.h"

#include <cstdlib>
#include <filesystem>

#ifndef M2L_DATA_DIR_DEFAULT
#define M2L_DATA_DIR_DEFAULT "data"
#endif

namespace m2l {

std::string default_data_dir() {
  if (const char* env = std::getenv("M2L_DATA_DIR"); env && *env) return env;
  return M2L_DATA_DIR_DEFAULT;
}

AssetPaths AssetPaths::in(const std::string& dir) {
  std::filesystem::path base(dir);
  return {(base / "lexicon.tsv").string(), (base / "words.tsv").string(),
          (base / "rhymes.tsv").string(), (base / "segdict.txt").string()};
}

}  // namespace m2l
