#include "deskagent/gui_context.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace deskagent::gui {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokens(const std::string& normalized) {
  std::vector<std::string> out;
  std::istringstream in(normalized);
  for (std::string t; in >> t;) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

int ceil_half(int v) { return (v + 1) / 2; }

}  // namespace

std::vector<GuiElement> MetadataParser::parse(const Observation& obs) const {
  std::vector<GuiElement> out;
  out.reserve(obs.metadata.size());
  for (const auto& m : obs.metadata) out.push_back({m.id, m.label, m.role, m.bbox, m.bbox.center()});
  return out;
}

std::vector<GuiElement> parse_elements(const Observation& obs) { return MetadataParser().parse(obs); }

std::string normalize_label(std::string_view text) {
  std::string spaced;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (c == '&') spaced += " and ";
    else if (std::isalnum(u)) spaced += static_cast<char>(std::tolower(u));
    else spaced += ' ';
  }
  std::string out;
  std::istringstream in(spaced);
  for (std::string t; in >> t;) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

double label_similarity(std::string_view query, std::string_view label) {
  if (query == label) return 1.0;
  if (lower(query) == lower(label)) return 0.95;
  std::string nq = normalize_label(query);
  std::string nl = normalize_label(label);
  if (nq.empty() || nl.empty()) return 0.0;
  auto tq = tokens(nq);
  auto tl = tokens(nl);
  const auto& small = tq.size() <= tl.size() ? tq : tl;
  const auto& large = tq.size() <= tl.size() ? tl : tq;
  if (std::includes(large.begin(), large.end(), small.begin(), small.end()))
    return 0.7 + 0.2 * static_cast<double>(small.size()) / static_cast<double>(large.size());
  double maxlen = static_cast<double>(std::max(nq.size(), nl.size()));
  return 0.7 * (1.0 - static_cast<double>(levenshtein(nq, nl)) / maxlen);
}

std::vector<Match> locate_element(std::string_view query, const std::vector<GuiElement>& elements,
                                  const LocateOptions& options) {
  std::vector<Match> scored;
  double best = 0.0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    double s = label_similarity(query, elements[i].label);
    best = std::max(best, s);
    if (s >= options.threshold) scored.push_back({i, elements[i], s});
  }
  if (scored.empty()) throw NoMatch(std::string(query), best);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Match& a, const Match& b) { return a.score > b.score; });
  if (scored.size() > options.top_k) scored.resize(options.top_k);
  return scored;
}

CropRegion region_search_crop(ScreenSize screen, const Rect& anchor) {
  Rect full{0, 0, screen.w, screen.h};
  if (!anchor.intersects(full)) throw AnchorOutOfScreen();
  int cw = std::min(screen.w, ceil_half(screen.w));
  int ch = std::min(screen.h, ceil_half(screen.h));
  Point c = anchor.center();
  int x0 = std::clamp(c.x - cw / 2, 0, screen.w - cw);
  int y0 = std::clamp(c.y - ch / 2, 0, screen.h - ch);
  return {x0, y0, x0 + cw, y0 + ch};
}

Observation crop_observation(const Observation& obs, const CropRegion& region) {
  Rect r{region.x0, region.y0, region.width(), region.height()};
  auto rebase = [&](Rect b) { return Rect{b.x - region.x0, b.y - region.y0, b.w, b.h}; };
  Observation out;
  out.screenshot.w = region.width();
  out.screenshot.h = region.height();
  for (const auto& e : obs.screenshot.elements) {
    if (!e.bbox.intersects(r)) continue;
    auto copy = e;
    copy.bbox = rebase(e.bbox);
    out.screenshot.elements.push_back(std::move(copy));
  }
  out.screenshot.digest = env::render_digest(out.screenshot);
  for (const auto& m : obs.metadata) {
    if (!m.bbox.intersects(r)) continue;
    auto copy = m;
    copy.bbox = rebase(m.bbox);
    out.metadata.push_back(std::move(copy));
  }
  return out;
}

}  // namespace deskagent::gui
