#!/usr/bin/env python3
"""Derive the operation counts frozen into the built-in catalog.

Network layer work is counted as multiply-accumulates from the
standard layer shapes at 224x224 input resolution.  A KxK convolution
producing Cout x H x W from Cin channels costs K*K*Cin*Cout*H*W MACs;
a depthwise KxK layer costs K*K*C*H*W; a pointwise layer is the K=1
case.  Residual stages count both of their two-layer basic blocks,
including the 1x1 downsample projection where the stage changes
resolution.  Depthwise-separable stages are grouped by spatial
resolution so that each catalog task covers one stage of the network.

Image kernels are counted in pixels of a 1920x1080 frame: their
variants' throughputs are published in pixels/cycle, so pixels are the
matching work unit.

Run this script to audit the numbers; it prints each task's total and
asserts the values the catalog ships.
"""


def conv(k, cin, cout, h, w):
    return k * k * cin * cout * h * w


def dw(k, c, h, w):
    return k * k * c * h * w


def basic_block(cin, cout, h, w, downsample):
    # Two 3x3 convolutions; the first may stride down from 2h x 2w.
    total = conv(3, cin, cout, h, w) + conv(3, cout, cout, h, w)
    if downsample:
        total += conv(1, cin, cout, h, w)
    return total


def resnet18_stage(cin, cout, h, w, first_downsamples):
    blocks = basic_block(cin, cout, h, w, first_downsamples)
    blocks += basic_block(cout, cout, h, w, False)
    return blocks


def main():
    resnet = {
        # conv2_x keeps 56x56 at 64 channels; later stages halve the
        # resolution and double the channels, projecting the residual.
        "conv2_x": resnet18_stage(64, 64, 56, 56, False),
        "conv3_x": resnet18_stage(64, 128, 28, 28, True),
        "conv4_x": resnet18_stage(128, 256, 14, 14, True),
        "conv5_x": resnet18_stage(256, 512, 7, 7, True),
    }
    resnet_barriers = {
        # 7x7/2 stem to 64 x 112 x 112, and the 512 -> 1000 classifier.
        "conv1_x": conv(7, 3, 64, 112, 112),
        "fc": 512 * 1000,
    }

    mobilenet = {
        # Stage 2: the 64->128 pair at 56x56 plus the 128 block.
        "conv_dw_pw_2_x": (dw(3, 64, 56, 56) + conv(1, 64, 128, 56, 56)
                           + dw(3, 128, 56, 56) + conv(1, 128, 128, 56, 56)),
        # Stage 3: 128->256 at 28x28 plus the 256 block.
        "conv_dw_pw_3_x": (dw(3, 128, 28, 28) + conv(1, 128, 256, 28, 28)
                           + dw(3, 256, 28, 28) + conv(1, 256, 256, 28, 28)),
        # Stage 4: 256->512 at 14x14 plus the five 512 blocks.
        "conv_dw_pw_4_x": (dw(3, 256, 14, 14) + conv(1, 256, 512, 14, 14)
                           + 5 * (dw(3, 512, 14, 14)
                                  + conv(1, 512, 512, 14, 14))),
    }

    pixels = 1920 * 1080

    for name, value in {**resnet, **resnet_barriers, **mobilenet}.items():
        print(f"{name:>16}: {value:>12,} MACs")
    print(f"{'frame kernels':>16}: {pixels:>12,} pixels")

    from slicesim.catalog import (FRAME_PIXELS, MOBILENET_WORK,
                                  RESNET_BARRIER_WORK, RESNET_WORK)
    assert resnet == RESNET_WORK
    assert resnet_barriers == RESNET_BARRIER_WORK
    assert mobilenet == MOBILENET_WORK
    assert pixels == FRAME_PIXELS
    print("catalog constants match")


if __name__ == "__main__":
    main()
