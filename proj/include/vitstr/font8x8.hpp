#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vitstr {

// Embedded 8x8 bitmap font for the printable ASCII range 33..126.
// Glyphs are authored as art rows ('X' = ink) and compiled to row bitmasks
// on first use. Confusable pairs (0/O/o, 1/l/I/|, ./,/'/`) are drawn with
// deliberately different shapes.
namespace font8x8 {

inline constexpr size_t kGlyphWidth = 8;
inline constexpr size_t kGlyphHeight = 8;
inline constexpr char kFirstChar = '!';
inline constexpr char kLastChar = '~';
inline constexpr size_t kGlyphCount = 94;

namespace detail {

inline constexpr const char* kArt[kGlyphCount][8] = {
    {  // '!'
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "........",
        "...X....",
        "........",
    },
    {  // '"'
        "..X..X..",
        "..X..X..",
        "........",
        "........",
        "........",
        "........",
        "........",
        "........",
    },
    {  // '#'
        "..X.X...",
        "..X.X...",
        "XXXXXXX.",
        "..X.X...",
        "XXXXXXX.",
        "..X.X...",
        "..X.X...",
        "........",
    },
    {  // '$'
        "...X....",
        ".XXXXX..",
        "X..X....",
        ".XXXXX..",
        "...X..X.",
        ".XXXXX..",
        "...X....",
        "........",
    },
    {  // '%'
        "XX....X.",
        "XX...X..",
        "....X...",
        "...X....",
        "..X.....",
        ".X...XX.",
        "X....XX.",
        "........",
    },
    {  // '&'
        ".XX.....",
        "X..X....",
        "X..X....",
        ".XX.....",
        "X..X.X..",
        "X...X...",
        ".XXX.XX.",
        "........",
    },
    {  // '\''
        "...X....",
        "...X....",
        "........",
        "........",
        "........",
        "........",
        "........",
        "........",
    },
    {  // '('
        "....X...",
        "...X....",
        "..X.....",
        "..X.....",
        "..X.....",
        "...X....",
        "....X...",
        "........",
    },
    {  // ')'
        "..X.....",
        "...X....",
        "....X...",
        "....X...",
        "....X...",
        "...X....",
        "..X.....",
        "........",
    },
    {  // '*'
        "........",
        "...X....",
        ".X.X.X..",
        "..XXX...",
        ".X.X.X..",
        "...X....",
        "........",
        "........",
    },
    {  // '+'
        "........",
        "...X....",
        "...X....",
        ".XXXXX..",
        "...X....",
        "...X....",
        "........",
        "........",
    },
    {  // ','
        "........",
        "........",
        "........",
        "........",
        "........",
        "...XX...",
        "....X...",
        "...X....",
    },
    {  // '-'
        "........",
        "........",
        "........",
        ".XXXXX..",
        "........",
        "........",
        "........",
        "........",
    },
    {  // '.'
        "........",
        "........",
        "........",
        "........",
        "........",
        "...XX...",
        "...XX...",
        "........",
    },
    {  // '/'
        "......X.",
        ".....X..",
        "....X...",
        "...X....",
        "..X.....",
        ".X......",
        "X.......",
        "........",
    },
    {  // '0'
        ".XXXXX..",
        "X....XX.",
        "X...X.X.",
        "X..X..X.",
        "X.X...X.",
        "XX....X.",
        ".XXXXX..",
        "........",
    },
    {  // '1'
        "...X....",
        "..XX....",
        ".X.X....",
        "...X....",
        "...X....",
        "...X....",
        ".XXXXX..",
        "........",
    },
    {  // '2'
        ".XXXXX..",
        "X.....X.",
        "......X.",
        ".....X..",
        "...XX...",
        ".XX.....",
        "XXXXXXX.",
        "........",
    },
    {  // '3'
        ".XXXXX..",
        "X.....X.",
        "......X.",
        "...XXX..",
        "......X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // '4'
        "....XX..",
        "...X.X..",
        "..X..X..",
        ".X...X..",
        "XXXXXXX.",
        ".....X..",
        ".....X..",
        "........",
    },
    {  // '5'
        "XXXXXXX.",
        "X.......",
        "XXXXXX..",
        "......X.",
        "......X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // '6'
        ".XXXXX..",
        "X.......",
        "X.......",
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // '7'
        "XXXXXXX.",
        "......X.",
        ".....X..",
        "....X...",
        "...X....",
        "...X....",
        "...X....",
        "........",
    },
    {  // '8'
        ".XXXXX..",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // '9'
        ".XXXXX..",
        "X.....X.",
        "X.....X.",
        ".XXXXXX.",
        "......X.",
        "......X.",
        ".XXXXX..",
        "........",
    },
    {  // ':'
        "........",
        "...XX...",
        "...XX...",
        "........",
        "...XX...",
        "...XX...",
        "........",
        "........",
    },
    {  // ';'
        "........",
        "...XX...",
        "...XX...",
        "........",
        "...XX...",
        "....X...",
        "...X....",
        "........",
    },
    {  // '<'
        "....X...",
        "...X....",
        "..X.....",
        ".X......",
        "..X.....",
        "...X....",
        "....X...",
        "........",
    },
    {  // '='
        "........",
        "........",
        ".XXXXX..",
        "........",
        ".XXXXX..",
        "........",
        "........",
        "........",
    },
    {  // '>'
        "..X.....",
        "...X....",
        "....X...",
        ".....X..",
        "....X...",
        "...X....",
        "..X.....",
        "........",
    },
    {  // '?'
        ".XXXXX..",
        "X.....X.",
        "......X.",
        "....XX..",
        "...X....",
        "........",
        "...X....",
        "........",
    },
    {  // '@'
        ".XXXXX..",
        "X.....X.",
        "X.XXX.X.",
        "X.X.X.X.",
        "X.XXXX..",
        "X.......",
        ".XXXXXX.",
        "........",
    },
    {  // 'A'
        "...X....",
        "..X.X...",
        ".X...X..",
        "X.....X.",
        "XXXXXXX.",
        "X.....X.",
        "X.....X.",
        "........",
    },
    {  // 'B'
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "XXXXXX..",
        "........",
    },
    {  // 'C'
        ".XXXXX..",
        "X.....X.",
        "X.......",
        "X.......",
        "X.......",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // 'D'
        "XXXXX...",
        "X....X..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X....X..",
        "XXXXX...",
        "........",
    },
    {  // 'E'
        "XXXXXXX.",
        "X.......",
        "X.......",
        "XXXXX...",
        "X.......",
        "X.......",
        "XXXXXXX.",
        "........",
    },
    {  // 'F'
        "XXXXXXX.",
        "X.......",
        "X.......",
        "XXXXX...",
        "X.......",
        "X.......",
        "X.......",
        "........",
    },
    {  // 'G'
        ".XXXXX..",
        "X.....X.",
        "X.......",
        "X..XXXX.",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // 'H'
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "XXXXXXX.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "........",
    },
    {  // 'I'
        ".XXXXX..",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        ".XXXXX..",
        "........",
    },
    {  // 'J'
        "..XXXXX.",
        "....X...",
        "....X...",
        "....X...",
        "....X...",
        "X...X...",
        ".XXX....",
        "........",
    },
    {  // 'K'
        "X....X..",
        "X...X...",
        "X..X....",
        "XXX.....",
        "X..X....",
        "X...X...",
        "X....X..",
        "........",
    },
    {  // 'L'
        "X.......",
        "X.......",
        "X.......",
        "X.......",
        "X.......",
        "X.......",
        "XXXXXXX.",
        "........",
    },
    {  // 'M'
        "X.....X.",
        "XX...XX.",
        "X.X.X.X.",
        "X..X..X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "........",
    },
    {  // 'N'
        "X.....X.",
        "XX....X.",
        "X.X...X.",
        "X..X..X.",
        "X...X.X.",
        "X....XX.",
        "X.....X.",
        "........",
    },
    {  // 'O'
        ".XXXXX..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // 'P'
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "XXXXXX..",
        "X.......",
        "X.......",
        "X.......",
        "........",
    },
    {  // 'Q'
        ".XXXXX..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X...X.X.",
        "X....X..",
        ".XXXX.X.",
        "........",
    },
    {  // 'R'
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "XXXXXX..",
        "X..X....",
        "X...X...",
        "X....XX.",
        "........",
    },
    {  // 'S'
        ".XXXXXX.",
        "X.......",
        "X.......",
        ".XXXXX..",
        "......X.",
        "......X.",
        "XXXXXX..",
        "........",
    },
    {  // 'T'
        "XXXXXXX.",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "........",
    },
    {  // 'U'
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // 'V'
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".X...X..",
        ".X...X..",
        "..X.X...",
        "...X....",
        "........",
    },
    {  // 'W'
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X..X..X.",
        "X.X.X.X.",
        "XX...XX.",
        "X.....X.",
        "........",
    },
    {  // 'X'
        "X.....X.",
        ".X...X..",
        "..X.X...",
        "...X....",
        "..X.X...",
        ".X...X..",
        "X.....X.",
        "........",
    },
    {  // 'Y'
        "X.....X.",
        ".X...X..",
        "..X.X...",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "........",
    },
    {  // 'Z'
        "XXXXXXX.",
        ".....X..",
        "....X...",
        "...X....",
        "..X.....",
        ".X......",
        "XXXXXXX.",
        "........",
    },
    {  // '['
        "..XXXX..",
        "..X.....",
        "..X.....",
        "..X.....",
        "..X.....",
        "..X.....",
        "..XXXX..",
        "........",
    },
    {  // '\\'
        "X.......",
        ".X......",
        "..X.....",
        "...X....",
        "....X...",
        ".....X..",
        "......X.",
        "........",
    },
    {  // ']'
        "..XXXX..",
        ".....X..",
        ".....X..",
        ".....X..",
        ".....X..",
        ".....X..",
        "..XXXX..",
        "........",
    },
    {  // '^'
        "...X....",
        "..X.X...",
        ".X...X..",
        "........",
        "........",
        "........",
        "........",
        "........",
    },
    {  // '_'
        "........",
        "........",
        "........",
        "........",
        "........",
        "........",
        "........",
        "XXXXXXX.",
    },
    {  // '`'
        "..X.....",
        "...X....",
        "........",
        "........",
        "........",
        "........",
        "........",
        "........",
    },
    {  // 'a'
        "........",
        "........",
        ".XXXXX..",
        "......X.",
        ".XXXXXX.",
        "X.....X.",
        ".XXXXXX.",
        "........",
    },
    {  // 'b'
        "X.......",
        "X.......",
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "XXXXXX..",
        "........",
    },
    {  // 'c'
        "........",
        "........",
        ".XXXXX..",
        "X.......",
        "X.......",
        "X.......",
        ".XXXXX..",
        "........",
    },
    {  // 'd'
        "......X.",
        "......X.",
        ".XXXXXX.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".XXXXXX.",
        "........",
    },
    {  // 'e'
        "........",
        "........",
        ".XXXXX..",
        "X.....X.",
        "XXXXXXX.",
        "X.......",
        ".XXXXX..",
        "........",
    },
    {  // 'f'
        "...XXX..",
        "..X.....",
        ".XXXXX..",
        "..X.....",
        "..X.....",
        "..X.....",
        "..X.....",
        "........",
    },
    {  // 'g'
        "........",
        ".XXXXXX.",
        "X.....X.",
        "X.....X.",
        ".XXXXXX.",
        "......X.",
        "......X.",
        ".XXXXX..",
    },
    {  // 'h'
        "X.......",
        "X.......",
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "........",
    },
    {  // 'i'
        "...X....",
        "........",
        "..XX....",
        "...X....",
        "...X....",
        "...X....",
        "..XXX...",
        "........",
    },
    {  // 'j'
        ".....X..",
        "........",
        "....XX..",
        ".....X..",
        ".....X..",
        ".....X..",
        "X....X..",
        ".XXXX...",
    },
    {  // 'k'
        "X.......",
        "X.......",
        "X...X...",
        "X..X....",
        "XXX.....",
        "X..X....",
        "X...X...",
        "........",
    },
    {  // 'l'
        "..XX....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "..XXX...",
        "........",
    },
    {  // 'm'
        "........",
        "........",
        "XXXXXXX.",
        "X..X..X.",
        "X..X..X.",
        "X..X..X.",
        "X..X..X.",
        "........",
    },
    {  // 'n'
        "........",
        "........",
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "........",
    },
    {  // 'o'
        "........",
        "........",
        ".XXXXX..",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".XXXXX..",
        "........",
    },
    {  // 'p'
        "........",
        "XXXXXX..",
        "X.....X.",
        "X.....X.",
        "XXXXXX..",
        "X.......",
        "X.......",
        "X.......",
    },
    {  // 'q'
        "........",
        ".XXXXXX.",
        "X.....X.",
        "X.....X.",
        ".XXXXXX.",
        "......X.",
        "......X.",
        "......X.",
    },
    {  // 'r'
        "........",
        "........",
        "X.XXX...",
        "XX...X..",
        "X.......",
        "X.......",
        "X.......",
        "........",
    },
    {  // 's'
        "........",
        "........",
        ".XXXXXX.",
        "X.......",
        ".XXXXX..",
        "......X.",
        "XXXXXX..",
        "........",
    },
    {  // 't'
        "..X.....",
        "..X.....",
        "XXXXX...",
        "..X.....",
        "..X.....",
        "..X.....",
        "...XXX..",
        "........",
    },
    {  // 'u'
        "........",
        "........",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".XXXXXX.",
        "........",
    },
    {  // 'v'
        "........",
        "........",
        "X.....X.",
        "X.....X.",
        ".X...X..",
        "..X.X...",
        "...X....",
        "........",
    },
    {  // 'w'
        "........",
        "........",
        "X..X..X.",
        "X..X..X.",
        "X..X..X.",
        "X..X..X.",
        ".XX.XX..",
        "........",
    },
    {  // 'x'
        "........",
        "........",
        "X.....X.",
        ".X...X..",
        "...X....",
        ".X...X..",
        "X.....X.",
        "........",
    },
    {  // 'y'
        "........",
        "X.....X.",
        "X.....X.",
        "X.....X.",
        ".XXXXXX.",
        "......X.",
        "......X.",
        ".XXXXX..",
    },
    {  // 'z'
        "........",
        "........",
        "XXXXXXX.",
        "....X...",
        "...X....",
        "..X.....",
        "XXXXXXX.",
        "........",
    },
    {  // '{'
        "....XX..",
        "...X....",
        "...X....",
        ".XX.....",
        "...X....",
        "...X....",
        "....XX..",
        "........",
    },
    {  // '|'
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
        "...X....",
    },
    {  // '}'
        "..XX....",
        "....X...",
        "....X...",
        ".....XX.",
        "....X...",
        "....X...",
        "..XX....",
        "........",
    },
    {  // '~'
        "........",
        "........",
        "........",
        ".XX...X.",
        "X..XXX..",
        "........",
        "........",
        "........",
    },
};

inline const std::array<std::array<uint8_t, 8>, kGlyphCount>& bitmaps() {
    static const auto table = [] {
        std::array<std::array<uint8_t, 8>, kGlyphCount> t{};
        for (size_t g = 0; g < kGlyphCount; ++g) {
            for (size_t r = 0; r < 8; ++r) {
                uint8_t row = 0;
                for (size_t c = 0; c < 8; ++c) {
                    if (kArt[g][r][c] == 'X') row |= static_cast<uint8_t>(0x80u >> c);
                }
                t[g][r] = row;
            }
        }
        return t;
    }();
    return table;
}

}  // namespace detail

inline bool has_glyph(char c) { return c >= kFirstChar && c <= kLastChar; }

inline const std::array<uint8_t, 8>& glyph(char c) {
    if (!has_glyph(c)) {
        throw std::out_of_range(std::string("font8x8: no glyph for byte ") +
                                std::to_string(static_cast<unsigned char>(c)));
    }
    return detail::bitmaps()[static_cast<size_t>(c - kFirstChar)];
}

inline bool glyph_pixel(char c, size_t x, size_t y) {
    return (glyph(c)[y] & (0x80u >> x)) != 0;
}

}  // namespace font8x8
}  // namespace vitstr
