#include "vlpr/alphabet.hpp"

#include "vlpr/error.hpp"

namespace vlpr {

namespace {

constexpr std::array<Symbol, LabelAlphabet::kSize> kSymbols{{
    {0, "d1", "١", SymbolKind::Digit},
    {1, "d2", "٢", SymbolKind::Digit},
    {2, "d3", "٣", SymbolKind::Digit},
    {3, "d4", "٤", SymbolKind::Digit},
    {4, "d5", "٥", SymbolKind::Digit},
    {5, "d6", "٦", SymbolKind::Digit},
    {6, "d7", "٧", SymbolKind::Digit},
    {7, "d8", "٨", SymbolKind::Digit},
    {8, "d9", "٩", SymbolKind::Digit},
    {9, "alef", "أ", SymbolKind::Letter},
    {10, "beh", "ب", SymbolKind::Letter},
    {11, "jeem", "ج", SymbolKind::Letter},
    {12, "dal", "د", SymbolKind::Letter},
    {13, "reh", "ر", SymbolKind::Letter},
    {14, "seen", "س", SymbolKind::Letter},
    {15, "sad", "ص", SymbolKind::Letter},
    {16, "tah", "ط", SymbolKind::Letter},
    {17, "ain", "ع", SymbolKind::Letter},
    {18, "feh", "ف", SymbolKind::Letter},
    {19, "qaf", "ق", SymbolKind::Letter},
    {20, "lam", "ل", SymbolKind::Letter},
    {21, "meem", "م", SymbolKind::Letter},
    {22, "noon", "ن", SymbolKind::Letter},
    {23, "heh", "ه", SymbolKind::Letter},
    {24, "waw", "و", SymbolKind::Letter},
    {25, "yeh", "ى", SymbolKind::Letter},
}};

}  // namespace

const std::array<Symbol, LabelAlphabet::kSize>& LabelAlphabet::symbols() { return kSymbols; }

const Symbol& LabelAlphabet::at(int index) {
    require(index >= 0 && index < kSize, "symbol index out of range");
    return kSymbols[index];
}

std::optional<int> LabelAlphabet::find_id(std::string_view id) {
    for (const auto& s : kSymbols) {
        if (s.id == id) return s.index;
    }
    return std::nullopt;
}

std::optional<int> LabelAlphabet::find_glyph(std::string_view utf8) {
    for (const auto& s : kSymbols) {
        if (s.glyph == utf8) return s.index;
    }
    return std::nullopt;
}

std::string LabelAlphabet::render(const std::vector<int>& digits, const std::vector<int>& letters) {
    std::string out;
    for (int d : digits) out += at(d).glyph;
    if (!digits.empty() && !letters.empty()) out += ' ';
    for (int l : letters) out += at(l).glyph;
    return out;
}

}  // namespace vlpr
