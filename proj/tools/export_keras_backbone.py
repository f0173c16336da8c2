# Copyright 2026 The mpox-screen Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Exports a Keras application backbone to an .mpxw weights blob.

    python3 tools/export_keras_backbone.py resnet50 weights/resnet50.mpxw

By default the ImageNet weights are downloaded through Keras. With
--random-init the backbone is randomly initialised instead (batch norm
statistics included), and --probe writes a 224x224 PNG plus the Keras
feature map for it, which the parity check compares against.
"""

import argparse
import re
import struct
import sys

import numpy as np

MAGIC = b"MPXW"
VERSION = 1


def build(name, weights):
    import keras

    apps = {
        "vgg16": keras.applications.VGG16,
        "resnet50": keras.applications.ResNet50,
        "inceptionv3": keras.applications.InceptionV3,
    }
    if name not in apps:
        sys.exit(f"unknown backbone {name!r}; expected one of {', '.join(apps)}")
    return apps[name](include_top=False, weights=weights, input_shape=(224, 224, 3))


def node_names(model):
    """Maps Keras layer names to node names of the C++ graph.

    InceptionV3 layers carry automatic names whose numbering depends on
    what the session built before, so suffixes are rebased to start at 0
    (conv2d, conv2d_1, ...), which is creation order.
    """
    auto = re.compile(r"^(conv2d|batch_normalization)(?:_(\d+))?$")
    parsed = {}
    for layer in model.layers:
        m = auto.match(layer.name)
        if m and model.name.startswith("inception"):
            parsed[layer.name] = (m.group(1), int(m.group(2) or 0))
    base = {}
    for prefix, n in parsed.values():
        base[prefix] = min(base.get(prefix, n), n)
    out = {}
    for layer in model.layers:
        if layer.name in parsed:
            prefix, n = parsed[layer.name]
            k = n - base[prefix]
            out[layer.name] = prefix if k == 0 else f"{prefix}_{k}"
        else:
            out[layer.name] = layer.name
    return out


def tensors(model):
    names = node_names(model)
    for layer in model.layers:
        kind = type(layer).__name__
        values = layer.get_weights()
        if not values:
            continue
        if kind == "Conv2D":
            keys = ["kernel", "bias"] if layer.use_bias else ["kernel"]
        elif kind == "BatchNormalization":
            keys = (["gamma"] if layer.scale else []) + ["beta", "moving_mean", "moving_variance"]
        else:
            sys.exit(f"unexpected weighted layer {layer.name} ({kind})")
        for key, value in zip(keys, values, strict=True):
            yield f"{names[layer.name]}/{key}", np.asarray(value, dtype="<f4")


def encode(items):
    out = bytearray(MAGIC)
    out += struct.pack("<II", VERSION, len(items))
    for name, value in items:
        raw = name.encode()
        out += struct.pack("<I", len(raw)) + raw
        out += struct.pack("<I", value.ndim) + struct.pack(f"<{value.ndim}I", *value.shape)
        out += value.tobytes()
    return bytes(out)


def randomize(model, seed):
    rng = np.random.default_rng(seed)
    for layer in model.layers:
        if type(layer).__name__ != "BatchNormalization":
            continue
        new = []
        for w, var in zip(layer.get_weights(), layer.weights):
            if "moving_variance" in var.path:
                new.append(rng.uniform(0.5, 1.5, w.shape).astype("f4"))
            elif "gamma" in var.path:
                new.append(rng.uniform(0.8, 1.2, w.shape).astype("f4"))
            else:
                new.append(rng.normal(0.0, 0.1, w.shape).astype("f4"))
        layer.set_weights(new)


def preprocess(name, rgb):
    x = rgb.astype("f8")
    if name == "inceptionv3":
        return x / 127.5 - 1.0
    return x[..., ::-1] - np.array([103.939, 116.779, 123.68])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("backbone")
    ap.add_argument("out")
    ap.add_argument("--random-init", type=int, metavar="SEED")
    ap.add_argument("--probe", metavar="PREFIX")
    args = ap.parse_args()

    import keras

    if args.random_init is not None:
        keras.utils.set_random_seed(args.random_init)
    model = build(args.backbone, None if args.random_init is not None else "imagenet")
    if args.random_init is not None:
        randomize(model, args.random_init)
    items = list(tensors(model))
    with open(args.out, "wb") as f:
        f.write(encode(items))
    print(f"wrote {len(items)} tensors to {args.out}")

    if args.probe:
        from PIL import Image

        rng = np.random.default_rng(7)
        rgb = rng.integers(0, 256, (224, 224, 3), dtype=np.uint8)
        Image.fromarray(rgb).save(args.probe + ".png")
        x = preprocess(args.backbone, rgb)[None].astype("f4")
        features = np.asarray(model(x, training=False))[0].astype("<f4")
        features.tofile(args.probe + ".f32")
        print(f"probe features {features.shape} -> {args.probe}.f32")


if __name__ == "__main__":
    main()
