// Writes a planted-topic corpus as JSON lines, for trying the pipeline.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "planted.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Planted-topic synthetic corpus"};
  wot::testing::PlantedOptions o;
  std::string out = "planted.jsonl";
  app.add_option("--topics", o.topics)->capture_default_str();
  app.add_option("--docs-per-topic", o.docs_per_topic)->capture_default_str();
  app.add_option("--keywords", o.keywords_per_topic)->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("--out", out)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  std::ofstream f(out);
  wot::write_corpus_jsonl(wot::testing::planted_corpus(o), f);
  std::cout << "wrote " << out << '\n';
  return 0;
}
