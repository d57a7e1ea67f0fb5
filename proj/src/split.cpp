#include <algorithm>
#include <cmath>
#include <map>

#include "motif/data.hpp"
#include "motif/errors.hpp"
#include "motif/random.hpp"

namespace motif {

DatasetManifest stratified_split(const DatasetManifest& manifest, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie strictly between 0 and 1, got " + std::to_string(test_fraction));
  manifest.validate();

  std::map<MotifId, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < manifest.records.size(); ++i)
    strata[manifest.records[i].first_primary()].push_back(i);

  DatasetManifest out = manifest;
  Rng rng(mix_seed(seed, salt::split));
  for (auto& [motif, members] : strata) {
    const std::size_t n = members.size();
    if (n < 2)
      throw DataError("motif '" + manifest.motif_names[motif] + "' has " + std::to_string(n) +
                      " image(s); stratified split needs at least 2");
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < n; ++k)
      out.records[members[k]].split = k < n_test ? SplitRole::test : SplitRole::train;
  }
  return out;
}

}  // namespace motif
