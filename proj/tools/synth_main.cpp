/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Writes the bundled synthetic fixture (ratings + item titles + metadata
// cache) so pipeline runs and tests need no downloads. The checked-in
// files under data/fixture/ are this tool's output for the default flags.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gatrec/catalog.hpp"
#include "gatrec/dataset.hpp"
#include "gatrec/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fixture generator"};
  std::string out_dir = "data/fixture";
  gatrec::SyntheticSpec spec;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--users", spec.num_users, "Number of users");
  app.add_option("--items", spec.num_items, "Number of items");
  CLI11_PARSE(app, argc, argv);

  const gatrec::SyntheticData data = gatrec::make_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  std::ofstream ratings(dir / "ratings.tsv", std::ios::binary);
  ratings << gatrec::serialize_interactions(data.interactions,
                                            gatrec::RatingsFormat::ML100K);

  std::ofstream items(dir / "items.psv", std::ios::binary);
  for (const auto& [id, meta] : data.items) {
    items << id << '|' << meta.title << '\n';
  }

  std::ofstream metadata(dir / "metadata.tsv", std::ios::binary);
  for (const auto& [id, meta] : data.items) {
    metadata << gatrec::MetadataCache::serialize_record(meta);
  }

  std::cout << "wrote " << data.interactions.size() << " ratings for "
            << spec.num_users << " users / " << spec.num_items << " items to "
            << out_dir << "\n";
  return 0;
}
