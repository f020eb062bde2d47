#include <riskdisc/keyphrase.hpp>
#include <riskdisc/project_similarity.hpp>
#include <riskdisc/text.hpp>

#include <iostream>

int main() {
  const auto phrases = riskdisc::rake_extract(
      riskdisc::normalize_text("Deep learning models require deep understanding"),
      riskdisc::StopwordList({"require"}), 5);
  const auto u = riskdisc::UnitVector::normalize({1.0, 0.0});
  const auto v = riskdisc::UnitVector::normalize({0.0, 1.0});
  if (phrases.size() != 2 || phrases[0].score != 8.5 || riskdisc::arc_cos_sim(u, v) != 0.5) {
    std::cerr << "installed package misbehaves\n";
    return 1;
  }
  std::cout << "consumer ok: " << phrases[0].phrase << "\n";
  return 0;
}
