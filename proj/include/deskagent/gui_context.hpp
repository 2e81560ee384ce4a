#pragma once

// Element extraction, label lookup and region cropping over observations.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "deskagent/error.hpp"
#include "deskagent/sim_env.hpp"

namespace deskagent::gui {

using env::Observation;
using env::Point;
using env::Rect;
using env::Role;
using env::ScreenSize;

struct GuiElement {
  std::string id;
  std::string label;
  Role role = Role::Pane;
  Rect bbox;
  Point center;  // floor of the bbox midpoint
};

/// Source of element positions for a screenshot.
class ElementParser {
 public:
  virtual ~ElementParser() = default;
  virtual std::vector<GuiElement> parse(const Observation& obs) const = 0;
};

/// Reads positions straight from the observation metadata.
class MetadataParser final : public ElementParser {
 public:
  std::vector<GuiElement> parse(const Observation& obs) const override;
};

/// One element per metadata entry, document order.
std::vector<GuiElement> parse_elements(const Observation& obs);

struct LocateOptions {
  double threshold = 0.55;
  std::size_t top_k = 5;
};

struct Match {
  std::size_t index = 0;  // position in the element list
  GuiElement element;
  double score = 0.0;
};

class NoMatch : public Error {
 public:
  NoMatch(std::string query, double best)
      : Error("NoMatch", "no element matches '" + query + "' (best score " + std::to_string(best) + ")"),
        query_(std::move(query)) {}
  const std::string& query() const noexcept { return query_; }

 private:
  std::string query_;
};

/// Lowercase, "&" spelled "and", punctuation dropped, whitespace collapsed.
std::string normalize_label(std::string_view text);

/// Similarity of a query to a label in [0, 1]:
/// 1.0 exact, 0.95 case-insensitive, 0.7..0.9 token subset, else scaled edit distance.
double label_similarity(std::string_view query, std::string_view label);

/// Ranked matches scoring at least the threshold, ties kept in document order.
/// Throws NoMatch when nothing qualifies.
std::vector<Match> locate_element(std::string_view query, const std::vector<GuiElement>& elements,
                                  const LocateOptions& options = {});

/// Half-open rectangle [x0, x1) x [y0, y1).
struct CropRegion {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const CropRegion&) const = default;
};

class AnchorOutOfScreen : public Error {
 public:
  AnchorOutOfScreen() : Error("AnchorOutOfScreen", "anchor box does not intersect the screen") {}
};

/// A ceil(W/2) x ceil(H/2) window centred on the anchor centre, translated
/// (never shrunk) to lie inside the screen.
CropRegion region_search_crop(ScreenSize screen, const Rect& anchor);

/// Keeps elements whose bbox intersects the region, rebased to its origin.
Observation crop_observation(const Observation& obs, const CropRegion& region);

}  // namespace deskagent::gui
