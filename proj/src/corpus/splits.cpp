#include "moral/corpus/splits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "moral/rng.hpp"

namespace moral::corpus {
namespace {

std::size_t portion(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac));
}

/// Per-domain index lists, each sorted by post_id then shuffled.
std::array<std::vector<std::size_t>, 3> shuffled_by_domain(const std::vector<UnifiedPost>& posts, Rng& rng) {
  std::array<std::vector<std::size_t>, 3> groups;
  for (std::size_t i = 0; i < posts.size(); ++i) groups[index(posts[i].domain)].push_back(i);
  for (auto& g : groups) {
    std::stable_sort(g.begin(), g.end(),
                     [&](std::size_t a, std::size_t b) { return posts[a].post_id < posts[b].post_id; });
    rng.shuffle(std::span<std::size_t>(g));
  }
  return groups;
}

void assign_train_pool(std::vector<UnifiedPost>& posts, std::span<const std::size_t> pool, double validation_frac) {
  const std::size_t n_val = portion(pool.size(), validation_frac);
  for (std::size_t k = 0; k < pool.size(); ++k) posts[pool[k]].split = k < n_val ? Split::Validation : Split::Train;
}

}  // namespace

SplitDesign SplitDesign::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::optional<std::string_view> arg =
      colon == std::string_view::npos ? std::nullopt : std::optional(text.substr(colon + 1));
  auto need_domain = [&]() {
    if (!arg) throw std::invalid_argument("design '" + std::string(text) + "' needs a domain, e.g. " + std::string(head) + ":fb");
    return domain_from_string(*arg);
  };
  auto no_arg = [&]() {
    if (arg) throw std::invalid_argument("design '" + std::string(head) + "' takes no domain");
  };
  if (head == "in_domain") return no_arg(), in_domain();
  if (head == "leave_one_out") return leave_one_out(need_domain());
  if (head == "liberty_in_domain") return no_arg(), liberty_in_domain();
  if (head == "liberty_cross") return liberty_cross(need_domain());
  throw std::invalid_argument("unknown design '" + std::string(text) + "'");
}

std::string SplitDesign::id() const {
  switch (kind) {
    case Kind::InDomain: return "in_domain";
    case Kind::LeaveOneOut: return "leave_one_out:" + std::string(slug(*domain));
    case Kind::LibertyInDomain: return "liberty_in_domain";
    case Kind::LibertyCross: return "liberty_cross:" + std::string(slug(*domain));
  }
  return {};
}

std::string SplitDesign::dir_name() const {
  std::string s = id();
  std::replace(s.begin(), s.end(), ':', '_');
  return s;
}

std::vector<UnifiedPost> make_splits(std::vector<UnifiedPost> posts, const SplitDesign& design,
                                     const SplitOptions& options) {
  if (!(options.train_frac > 0.0 && options.train_frac < 1.0)) {
    throw std::invalid_argument("train_frac must lie in (0, 1)");
  }
  if (!(options.validation_frac >= 0.0 && options.validation_frac < 1.0)) {
    throw std::invalid_argument("validation_frac must lie in [0, 1)");
  }

  if (design.is_liberty()) {
    std::erase_if(posts, [](const UnifiedPost& p) {
      return !p.gold.annotated(MoralLabel::Liberty) || !p.gold.annotated(MoralLabel::Oppression);
    });
    if (posts.empty()) throw std::invalid_argument("no post carries Liberty/Oppression annotations");
  }
  for (UnifiedPost& p : posts) p.split = Split::Unassigned;

  Rng rng(options.seed);
  const auto groups = shuffled_by_domain(posts, rng);

  switch (design.kind) {
    case SplitDesign::Kind::InDomain:
    case SplitDesign::Kind::LibertyInDomain:
      for (const auto& g : groups) {
        const std::size_t n_train = portion(g.size(), options.train_frac);
        assign_train_pool(posts, std::span(g).first(n_train), options.validation_frac);
        for (std::size_t k = n_train; k < g.size(); ++k) posts[g[k]].split = Split::Test;
      }
      break;
    case SplitDesign::Kind::LeaveOneOut:
    case SplitDesign::Kind::LibertyCross: {
      const Domain held_out = design.domain.value();
      if (groups[index(held_out)].empty()) {
        throw std::invalid_argument(design.is_liberty()
                                        ? "domain " + std::string(name(held_out)) + " has no Liberty annotations"
                                        : "held-out domain " + std::string(name(held_out)) + " has no posts");
      }
      bool any_train = false;
      for (Domain d : kAllDomains) {
        const auto& g = groups[index(d)];
        if (d == held_out) {
          for (std::size_t i : g) posts[i].split = Split::Test;
        } else {
          assign_train_pool(posts, g, options.validation_frac);
          any_train = any_train || !g.empty();
        }
      }
      if (!any_train) {
        throw std::invalid_argument("design " + design.id() + " leaves no training posts");
      }
      break;
    }
  }
  return posts;
}

}  // namespace moral::corpus
