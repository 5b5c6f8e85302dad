#!/usr/bin/env python3
# Copyright 2026 The SA-DPSGD Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds data/mnist-subset/ from the 10,000 MNIST digits in the npm `mnist`
package (src/digits/<d>.json, pixels stored as x/255 rounded to 3 places).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist-subset
"""

import gzip
import json
import random
import struct
import sys
from pathlib import Path

TRAIN_SIZE = 8000


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload)


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    examples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        for i in range(0, len(data), 784):
            pixels = bytes(round(v * 255) for v in data[i:i + 784])
            examples.append((pixels, digit))
    random.Random(20230117).shuffle(examples)
    for name, part in (("train", examples[:TRAIN_SIZE]),
                       ("t10k", examples[TRAIN_SIZE:])):
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x00000803,
                  (len(part), 28, 28), b"".join(p for p, _ in part))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x00000801,
                  (len(part),), bytes(l for _, l in part))
        print(name, len(part))


if __name__ == "__main__":
    main()
