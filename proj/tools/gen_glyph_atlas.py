#!/usr/bin/env python3
# Copyright (C) 2026 The mudoc Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
# with the License. You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software distributed under the License
# is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
# or implied. See the License for the specific language governing permissions and limitations under the License.

# Regenerates core/src/glyph_atlas.inc from the Hershey simplex face (public domain)
# as rendered by OpenCV. Each glyph is a 12x20 cell, baseline at row 15.
import pathlib

import cv2
import numpy as np

CELL_W, CELL_H, BASELINE = 12, 20, 15

out = pathlib.Path(__file__).resolve().parent.parent / "core" / "src" / "glyph_atlas.inc"
rows = []
for code in range(32, 127):
    img = np.zeros((CELL_H, CELL_W), np.uint8)
    ch = chr(code)
    (tw, _), _ = cv2.getTextSize(ch, cv2.FONT_HERSHEY_SIMPLEX, 0.5, 1)
    x = max(0, (CELL_W - tw) // 2)
    cv2.putText(img, ch, (x, BASELINE), cv2.FONT_HERSHEY_SIMPLEX, 0.5, 255, 1, cv2.LINE_8)
    bits = []
    for r in range(CELL_H):
        mask = 0
        for c in range(CELL_W):
            if img[r, c] > 127:
                mask |= 1 << (CELL_W - 1 - c)
        bits.append(f"0x{mask:03x}")
    label = "space" if ch == " " else ("backslash" if ch == "\\" else ch)
    rows.append(f"    {{{', '.join(bits)}}},  // {label}")

LICENSE = "".join(
    line.replace("#", "//", 1) + "\n" for line in pathlib.Path(__file__).read_text().splitlines()[1:11]
)
out.write_text(
    LICENSE + "\n"
    "// Generated by tools/gen_glyph_atlas.py. Do not edit.\n"
    "// Rows are 12-bit masks, most significant bit is the leftmost column.\n"
    + "\n".join(rows) + "\n")
print(f"wrote {out}")
