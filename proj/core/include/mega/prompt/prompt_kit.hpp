#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mega/chat.hpp"
#include "mega/tutor/session.hpp"

namespace mega::prompt {

using Fields = std::map<std::string, std::string, std::less<>>;

// A versioned template file: a [[system]] section holding the system prompt
// and one section per message stub. Immutable once loaded.
class PromptTemplate {
public:
    // Throws Error(MissingTemplateResource) when the file or its system
    // section is absent.
    static PromptTemplate load(const std::filesystem::path& file);
    // resources/prompts/mega_v1.prompt, loaded once.
    static const PromptTemplate& bundled();

    const std::string& system_text() const noexcept { return system_; }
    bool has_stub(std::string_view name) const;
    // Throws Error(MissingTemplateResource).
    const std::string& stub(std::string_view name) const;
    // Substitutes every {placeholder}. Throws Error(MissingField) naming the
    // first placeholder without a value. Values are not rescanned.
    std::string render(std::string_view stub_name, const Fields& fields) const;
    // SHA-256 of the file bytes.
    const std::string& hash() const noexcept { return hash_; }
    const std::string& version() const noexcept { return version_; }

private:
    std::string system_;
    std::map<std::string, std::string, std::less<>> stubs_;
    std::string hash_;
    std::string version_;
};

// Placeholder names appearing in text, in order of first appearance.
std::vector<std::string> placeholders(std::string_view text);

std::string render_system_prompt();

// Outbound messages for a phase. Identification opens with the system prompt
// and carries the upload on the Student message for image sessions. Sessions
// of Unknown category use the open stubs that let the model author problems.
// Throws Error(MissingField) when the session lacks what the phase needs.
std::vector<ChatMessage> render_turn(tutor::Phase phase, const tutor::Session& session,
                                     const PromptTemplate& tmpl = PromptTemplate::bundled());

// Closed LaTeX rewrite table: \frac{a}{b} -> (a)/(b), x^{n} -> x^n,
// \sqrt{a} -> sqrt(a), \cdot and \times -> *, \div -> /, \pi -> pi,
// \sin \cos \tan -> sin cos tan, \left and \right dropped, \text{a} -> a,
// ^\circ -> °, comparison and spacing commands, $ and \( \) \[ \] delimiters
// stripped. Unknown commands are kept and logged at debug level.
std::string normalize_notation(std::string_view text);

}  // namespace mega::prompt
