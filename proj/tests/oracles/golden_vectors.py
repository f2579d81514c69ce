#!/usr/bin/env python3
"""Independent oracle for the identifier-derivation golden vectors.

Uses only Python's hmac/hashlib. The C++ tests pin the values printed here.
"""
import hashlib
import hmac
import struct


def encode_fields(fields):
    out = b""
    for f in fields:
        out += struct.pack(">I", len(f)) + f
    return out


def prf(key, msg):
    return hmac.new(key, msg, hashlib.sha256).hexdigest()


ZERO_KEY = bytes(32)
SALT_01 = bytes([0x01] * 32)
SALT_02 = bytes([0x02] * 32)


def main():
    print("rfc4231_case1",
          hmac.new(bytes([0x0b] * 20), b"Hi There", hashlib.sha256).hexdigest())
    print("pre_uid_cid1",
          prf(ZERO_KEY, encode_fields([b"idp-a", b"alice", b"cid-1"])))
    print("pre_uid_cid2",
          prf(ZERO_KEY, encode_fields([b"idp-a", b"alice", b"cid-2"])))
    print("uid_salt1",
          prf(ZERO_KEY, encode_fields([b"idp-a", b"alice", b"cid-1", SALT_01])))
    print("uid_salt2",
          prf(ZERO_KEY, encode_fields([b"idp-a", b"alice", b"cid-1", SALT_02])))
    abc = [b"idp-a", b"alice", b"idp-b", b"alice-b", b"idp-c", b"alice-c"]
    print("multi_abc",
          prf(ZERO_KEY, encode_fields(abc + [b"cid-1", SALT_01])))
    cba = [b"idp-c", b"alice-c", b"idp-b", b"alice-b", b"idp-a", b"alice"]
    print("multi_cba",
          prf(ZERO_KEY, encode_fields(cba + [b"cid-1", SALT_01])))
    print("multi_pre_abc",
          prf(ZERO_KEY, encode_fields(abc + [b"cid-1"])))
    print("tag_a_alice", prf(ZERO_KEY, encode_fields([b"idp-a", b"alice"])))
    print("tag_b_alice", prf(ZERO_KEY, encode_fields([b"idp-b", b"alice"])))
    print("client_id_zero_nonce",
          hashlib.sha256(encode_fields([bytes(32), b"https://rp.local/cb"])).hexdigest())
    print("measurement_miso_mixer_v1",
          hashlib.sha256(b"miso-mixer-v1").hexdigest())


if __name__ == "__main__":
    main()
