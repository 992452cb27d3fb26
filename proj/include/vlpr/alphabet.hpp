#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vlpr {

enum class SymbolKind { Digit, Letter };

struct Symbol {
    int index;               // class index, 0..25
    std::string_view id;     // stable ASCII id used in files
    std::string_view glyph;  // UTF-8 display form
    SymbolKind kind;
};

/// The 26 plate classes: Hindi digits 1..9 followed by the 17 plate letters.
class LabelAlphabet {
public:
    static constexpr int kSize = 26;
    static constexpr int kDigits = 9;
    static constexpr int kLetters = 17;

    static const std::array<Symbol, kSize>& symbols();
    static const Symbol& at(int index);
    static std::optional<int> find_id(std::string_view id);
    static std::optional<int> find_glyph(std::string_view utf8);
    static bool is_digit(int index) { return index >= 0 && index < kDigits; }
    static bool is_letter(int index) { return index >= kDigits && index < kSize; }

    /// Joins display glyphs; digits and letters groups separated by one space.
    static std::string render(const std::vector<int>& digits, const std::vector<int>& letters);
};

}  // namespace vlpr
