#include "moral/corpus/distribution.hpp"

#include <sstream>
#include <vector>

namespace moral::corpus {
namespace {

struct Row {
  std::string name;
  std::array<std::size_t, 3> by_domain;
  std::size_t total;
};

std::vector<Row> rows_of(const LabelDistribution& dist) {
  std::vector<Row> rows;
  auto add = [&](MoralLabel l, std::string label) {
    Row r{std::move(label), {}, dist.total(l)};
    for (Domain d : kAllDomains) r.by_domain[index(d)] = dist.count(d, l);
    rows.push_back(std::move(r));
  };
  for (MoralLabel l : kCoreLabels) add(l, std::string(name(l)));
  add(MoralLabel::NonMoral, "Non-Moral");
  add(MoralLabel::Liberty, "Liberty†");
  add(MoralLabel::Oppression, "Oppression†");
  rows.push_back(Row{"Non-Moral†", dist.liberty_non_moral, dist.liberty_non_moral_total()});
  return rows;
}

}  // namespace

std::size_t LabelDistribution::total(MoralLabel l) const {
  std::size_t t = 0;
  for (const auto& per_domain : counts) t += per_domain[index(l)];
  return t;
}

std::size_t LabelDistribution::liberty_non_moral_total() const {
  return liberty_non_moral[0] + liberty_non_moral[1] + liberty_non_moral[2];
}

LabelDistribution label_distribution(std::span<const UnifiedPost> posts) {
  LabelDistribution dist;
  for (const UnifiedPost& p : posts) {
    for (MoralLabel l : kAllLabels) {
      if (p.gold.present(l)) ++dist.counts[index(p.domain)][index(l)];
    }
    if (p.gold.annotated(MoralLabel::Liberty) && p.gold.present(MoralLabel::NonMoral)) {
      ++dist.liberty_non_moral[index(p.domain)];
    }
  }
  return dist;
}

std::string render_distribution_markdown(const LabelDistribution& dist) {
  std::ostringstream out;
  out << "| | MFTC | MFRC | FB | Total |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const Row& r : rows_of(dist)) {
    out << "| " << r.name << " | " << r.by_domain[0] << " | " << r.by_domain[1] << " | " << r.by_domain[2]
        << " | " << r.total << " |\n";
  }
  return out.str();
}

std::string render_distribution_csv(const LabelDistribution& dist) {
  std::ostringstream out;
  out << "label,MFTC,MFRC,FB,Total\n";
  for (Row r : rows_of(dist)) {
    if (r.name.ends_with("†")) r.name = r.name.substr(0, r.name.size() - 3) + "_partial";
    out << r.name << ',' << r.by_domain[0] << ',' << r.by_domain[1] << ',' << r.by_domain[2] << ',' << r.total
        << '\n';
  }
  return out.str();
}

}  // namespace moral::corpus
