#pragma once
// Bundled deterministic rule-based service responders, addressable via
// scripted:// URLs. They stand in for the chat, embedding, and classifier
// endpoints in tests and fixture runs: same request, same bytes, no network.
//
// The responders are keyword-driven and bound to the bundled toy registry
// (sentiment / topic / detoxification). Each toy sentence carries one marker
// word per aspect; the labeler, the classifier, and the toy corpus generator
// all share the marker table, so stage outputs are hand-checkable.
//
// Chat profiles:
//   labeler   - answers augmentation prompts only
//   obedient  - labeler + generation that follows every control
//   semi      - labeler + generation that follows sentiment and
//               detoxification but picks the topic from a sentiment-dependent
//               half, cycling with the repeat index
// Embed profiles:
//   hash16    - 16-dim token count vector, buckets by token hash
// Classifier profiles:
//   keyword   - marker lookup; uniform distribution when no marker is found

#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "mctg/services.hpp"

namespace mctg {

std::shared_ptr<ChatBackend> make_scripted_chat(const std::string& profile);
std::shared_ptr<EmbedBackend> make_scripted_embed(const std::string& profile);
std::shared_ptr<ClassifyBackend> make_scripted_classifier(const std::string& profile,
                                                          const std::string& aspect_id);

// Canonical attribute name -> marker token ("positive" -> "wonderful", ...).
const std::map<std::string, std::string>& toy_markers();

// The three-aspect toy registry the scripted profiles are bound to.
json toy_registry_json();

// Writes the bundled toy corpus into dir: imdb.csv, agnews.csv,
// jigsaw.jsonl, prefixes.txt. 100 rows per dataset, fully deterministic.
void write_toy_corpus(const std::string& dir);

}  // namespace mctg
