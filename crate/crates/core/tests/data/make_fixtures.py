"""Regenerates the reference files in this directory with mrcfile and Pillow."""
import numpy as np
import mrcfile
from PIL import Image

h, w = 5, 7
base = np.arange(h * w).reshape(h, w)


def put(name, arr, voxel=None):
    with mrcfile.new(name, overwrite=True) as m:
        m.set_data(arr)
        if voxel:
            m.voxel_size = voxel


put("mode0_int8.mrc", (base - 17).astype(np.int8))
put("mode1_int16.mrc", (base * 300 - 5000).astype(np.int16))
put("mode2_float32.mrc", (base * 0.25 - 3.5).astype(np.float32), voxel=1.5)
put("mode6_uint16.mrc", (base * 1000).astype(np.uint16))
put("stack3_float32.mrc", np.stack([base + 100 * k for k in range(3)]).astype(np.float32))
Image.fromarray((base * 7).astype(np.uint8), mode="L").save("gray8.png")
