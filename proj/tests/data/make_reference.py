#!/usr/bin/env python3
"""Generates the NIfTI-1 reference fixtures used by the IO tests.

The files are laid out byte by byte from the published NIfTI-1 standard
(https://nifti.nimh.nih.gov/nifti-1), independently of the C++ reader and
writer under test. Run from tests/data/:

    python3 make_reference.py

The fixtures are committed; this script documents their provenance.
"""

import gzip
import struct


def nifti1_header(dims, datatype, bitpix, pixdim, scl_slope=1.0, scl_inter=0.0,
                  intent_code=0, magic=b"n+1\x00"):
    h = bytearray(348)
    struct.pack_into("<i", h, 0, 348)                      # sizeof_hdr
    ndim = len(dims)
    struct.pack_into("<8h", h, 40, ndim, *dims, *([1] * (7 - ndim)))
    struct.pack_into("<h", h, 68, intent_code)             # intent_code
    struct.pack_into("<h", h, 70, datatype)                # datatype
    struct.pack_into("<h", h, 72, bitpix)                  # bitpix
    struct.pack_into("<8f", h, 76, 1.0, *pixdim, *([1.0] * (7 - len(pixdim))))
    struct.pack_into("<f", h, 108, 352.0)                  # vox_offset
    struct.pack_into("<f", h, 112, scl_slope)
    struct.pack_into("<f", h, 116, scl_inter)
    h[344:348] = magic
    return bytes(h)


def write(path, header, payload, gz=False):
    blob = header + b"\x00" * 4 + payload                  # 4 pad bytes to vox_offset 352
    if gz:
        with open(path, "wb") as f:
            f.write(gzip.compress(blob, mtime=0))
    else:
        with open(path, "wb") as f:
            f.write(blob)
    print(path, len(blob), "bytes")


def main():
    # f32 volume, 4x3x2, pixdim (1.5, 2.0, 2.5), value i + 10j + 100k (x fastest).
    nx, ny, nz = 4, 3, 2
    vals = [float(i + 10 * j + 100 * k)
            for k in range(nz) for j in range(ny) for i in range(nx)]
    hdr = nifti1_header((nx, ny, nz), 16, 32, (1.5, 2.0, 2.5))
    payload = struct.pack("<%df" % len(vals), *vals)
    write("ref_f32.nii", hdr, payload)
    write("ref_f32.nii.gz", hdr, payload, gz=True)

    # i16 volume with slope/inter scaling: value = raw * 2 + 10, raw = i + 3j + 9k - 5.
    nx = ny = nz = 3
    raw = [i + 3 * j + 9 * k - 5
           for k in range(nz) for j in range(ny) for i in range(nx)]
    hdr = nifti1_header((nx, ny, nz), 4, 16, (1.0, 1.0, 1.0),
                        scl_slope=2.0, scl_inter=10.0)
    write("ref_i16_scaled.nii", hdr, struct.pack("<%dh" % len(raw), *raw))

    # u8 volume stored as 4-D with a trailing singleton dim.
    nx, ny, nz = 3, 2, 2
    u8 = [(7 * i + 3 * j + k) % 251
          for k in range(nz) for j in range(ny) for i in range(nx)]
    hdr = nifti1_header((nx, ny, nz, 1), 2, 8, (1.0, 1.0, 1.0))
    write("ref_u8_4d.nii", hdr, bytes(u8))

    # f64 volume, gzipped.
    nx, ny, nz = 2, 2, 2
    v64 = [0.5 * i - 1.25 * j + 3.75 * k + 0.125
           for k in range(nz) for j in range(ny) for i in range(nx)]
    hdr = nifti1_header((nx, ny, nz), 64, 64, (0.5, 0.5, 0.5))
    write("ref_f64.nii.gz", hdr, struct.pack("<%dd" % len(v64), *v64), gz=True)

    # Wrong magic ("ni1" = header/data pair), must be rejected.
    hdr = nifti1_header((2, 2, 2), 16, 32, (1.0, 1.0, 1.0), magic=b"ni1\x00")
    write("bad_magic.nii", hdr, struct.pack("<8f", *([0.0] * 8)))

    # Truncated payload: header promises 4x3x2 f32 but carries 5 values.
    hdr = nifti1_header((4, 3, 2), 16, 32, (1.0, 1.0, 1.0))
    write("truncated.nii", hdr, struct.pack("<5f", *([1.0] * 5)))


if __name__ == "__main__":
    main()
