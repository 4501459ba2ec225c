#include "moral/corpus/types.hpp"

#include <stdexcept>

namespace moral::corpus {

std::string_view name(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::Unassigned: break;
  }
  return "unassigned";
}

Split split_from_string(std::string_view text) {
  for (Split s : {Split::Unassigned, Split::Train, Split::Validation, Split::Test}) {
    if (name(s) == text) return s;
  }
  throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

void validate(const UnifiedPost& post) {
  bool any = false;
  bool moral = false;
  for (MoralLabel l : kAllLabels) {
    if (!post.gold.present(l)) continue;
    any = true;
    moral = moral || l != MoralLabel::NonMoral;
  }
  if (!any) throw std::invalid_argument("post '" + post.post_id + "' has no positive gold label");
  if (moral && post.gold.present(MoralLabel::NonMoral)) {
    throw std::invalid_argument("post '" + post.post_id + "' is NonMoral and moral at once");
  }
  if (!post.gold.annotated(MoralLabel::NonMoral)) {
    throw std::invalid_argument("post '" + post.post_id + "' leaves NonMoral unannotated");
  }
  for (MoralLabel l : kCoreLabels) {
    if (!post.gold.annotated(l)) {
      throw std::invalid_argument("post '" + post.post_id + "' leaves " + std::string(name(l)) +
                                  " unannotated");
    }
  }
  if (post.sentiment_score && (*post.sentiment_score < -1.0 || *post.sentiment_score > 1.0)) {
    throw std::invalid_argument("post '" + post.post_id + "' has sentiment outside [-1, 1]");
  }
}

}  // namespace moral::corpus
