#!/usr/bin/env python3
# Copyright 2026 The SA-DPSGD Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the tiny hand-built IDX files used by the data tests."""

import pathlib
import struct

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    pixels = bytes(784) + bytes([255]) * 784
    (OUT / "two-images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x803, 2, 28, 28) + pixels)
    (OUT / "two-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, 2) + bytes([7, 1]))
    # A label file carrying the image magic.
    (OUT / "bad-magic-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x803, 2) + bytes([7, 1]))
    (OUT / "three-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, 3) + bytes([7, 1, 0]))


if __name__ == "__main__":
    main()
