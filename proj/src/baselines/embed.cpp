#include "moral/baselines/embed.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <charconv>
#include <stdexcept>

#include "moral/hash.hpp"

namespace moral::baselines {
namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

double to_double(std::string_view s, std::size_t line_no) {
  // from_chars for double is unavailable on older libstdc++.
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
}

}  // namespace

WordEmbeddings WordEmbeddings::load_text(const std::filesystem::path& path) {
  try {
    return parse_text(read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

WordEmbeddings WordEmbeddings::parse_text(std::string_view text) {
  WordEmbeddings emb;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto f = fields(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (f.empty()) continue;
    if (line_no == 1 && f.size() == 2) {
      int count = 0, dim = 0;
      const bool a = std::from_chars(f[0].data(), f[0].data() + f[0].size(), count).ec == std::errc{};
      const bool b = std::from_chars(f[1].data(), f[1].data() + f[1].size(), dim).ec == std::errc{};
      if (a && b) {
        emb.dim_ = dim;
        continue;
      }
    }
    if (emb.dim_ == 0) emb.dim_ = static_cast<int>(f.size()) - 1;
    if (static_cast<int>(f.size()) != emb.dim_ + 1) {
      throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": expected " +
                               std::to_string(emb.dim_) + " values, got " + std::to_string(f.size() - 1));
    }
    Eigen::VectorXd v(emb.dim_);
    for (int i = 0; i < emb.dim_; ++i) v(i) = to_double(f[static_cast<std::size_t>(i) + 1], line_no);
    emb.vectors_.emplace(std::string(f[0]), std::move(v));
  }
  if (emb.vectors_.empty() || emb.dim_ <= 0) throw std::runtime_error("no word vectors");
  return emb;
}

void WordEmbeddings::add(std::string word, const Eigen::VectorXd& v) {
  if (dim_ == 0) dim_ = static_cast<int>(v.size());
  if (v.size() != dim_) throw std::invalid_argument("word vector dimension mismatch for '" + word + "'");
  vectors_[std::move(word)] = v;
}

const Eigen::VectorXd* WordEmbeddings::find(std::string_view word) const {
  if (auto it = vectors_.find(std::string(word)); it != vectors_.end()) return &it->second;
  std::string low(word);
  for (char& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (auto it = vectors_.find(low); it != vectors_.end()) return &it->second;
  return nullptr;
}

std::vector<std::string> embed_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || (c == '\'' && !cur.empty())) {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

DocVector document_vector(std::string_view text_clean, const WordEmbeddings& emb) {
  DocVector d{Eigen::VectorXd::Zero(emb.dim()), 0};
  for (const std::string& tok : embed_tokens(text_clean)) {
    if (const auto* v = emb.find(tok)) {
      d.v += *v;
      ++d.in_vocab;
    }
  }
  if (d.in_vocab > 0) d.v /= static_cast<double>(d.in_vocab);
  return d;
}

EmbedModel embed_classify_train(std::span<const corpus::UnifiedPost> posts, MoralLabel label,
                                const WordEmbeddings& emb, const ForestOptions& options) {
  std::vector<const corpus::UnifiedPost*> used;
  for (const auto& p : posts) {
    if (p.gold.annotated(label)) used.push_back(&p);
  }
  if (used.empty()) throw std::invalid_argument("embed baseline: no annotated training posts");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(used.size()), emb.dim());
  std::vector<int> y(used.size());
  EmbedModel model{RandomForest(options), 0};
  for (std::size_t i = 0; i < used.size(); ++i) {
    const DocVector d = document_vector(used[i]->text_clean, emb);
    if (d.empty()) ++model.empty_docs;
    X.row(static_cast<Eigen::Index>(i)) = d.v.transpose();
    y[i] = used[i]->gold.target(label);
  }
  if (model.empty_docs > 0) {
    spdlog::warn("embed baseline: {} of {} training posts have no in-vocabulary token", model.empty_docs,
                 used.size());
  }
  model.forest.fit(X, y);
  return model;
}

std::vector<int> embed_classify_predict(const EmbedModel& model, std::span<const std::string> texts,
                                        const WordEmbeddings& emb) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(texts.size()), emb.dim());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = document_vector(texts[i], emb).v.transpose();
  }
  return model.forest.predict(X);
}

}  // namespace moral::baselines
