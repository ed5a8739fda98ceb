// Writes a synthetic dataset (images, ground truth, two predictions per
// image) and its manifest.

#include <iostream>

#include "CLI11.hpp"
#include "depthsynth/error.hpp"
#include "synthetic/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic scenes for depthsynth"};
  depthsynth::synthetic::DatasetOptions opt;
  std::string out;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--count", opt.count, "Number of entries");
  app.add_option("--width", opt.width, "Width in pixels");
  app.add_option("--height", opt.height, "Height in pixels");
  app.add_option("--seed", opt.seed, "Seed");
  app.add_option("--unlabeled-every", opt.unlabeled_every, "Every k-th entry has no ground truth");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    const auto m = depthsynth::synthetic::generate_dataset(out, opt);
    std::cout << "wrote " << m.entries.size() << " entries to " << out << "/manifest.json\n";
  } catch (const depthsynth::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
