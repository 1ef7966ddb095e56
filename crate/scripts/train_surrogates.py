"""Train the top-tagging surrogate models shipped in crates/core/data/surrogates.

Usage:
    hlsrnn gen-fixtures --out-dir train --benchmark top_tagging --samples 20000 --seed 1
    hlsrnn gen-fixtures --out-dir val --benchmark top_tagging --samples 4000 --seed 2
    python scripts/train_surrogates.py train/binary_seq.csv val/binary_seq.csv crates/core/data/surrogates
"""

import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import tensorflow as tf
from sklearn.metrics import roc_auc_score

SEQ_LEN, INPUT_DIM, HIDDEN, DENSE = 20, 6, 20, 64


def load(path):
    df = pd.read_csv(path)
    y = df["label"].to_numpy(dtype=np.float32)
    x = df.drop(columns="label").to_numpy(dtype=np.float32).reshape(-1, SEQ_LEN, INPUT_DIM)
    return x, y


def build(cell):
    rnn = tf.keras.layers.LSTM if cell == "lstm" else tf.keras.layers.GRU
    return tf.keras.Sequential(
        [
            tf.keras.Input((SEQ_LEN, INPUT_DIM)),
            rnn(HIDDEN),
            tf.keras.layers.Dense(DENSE, activation="relu"),
            tf.keras.layers.Dense(1, activation="sigmoid"),
        ]
    )


def export(model, cell, auc):
    rnn, d1, d2 = model.layers
    k, u, b = (w.astype(np.float64) for w in rnn.get_weights())
    layers = [
        {
            "kind": cell,
            "input_dim": INPUT_DIM,
            "units": HIDDEN,
            "seq_len": SEQ_LEN,
            **({"reset_after": True} if cell == "gru" else {}),
            "weights": {"kernel": k.tolist(), "recurrent_kernel": u.tolist(), "bias": b.reshape(-1).tolist()},
        }
    ]
    width = HIDDEN
    for dense, act in ((d1, "relu"), (d2, "sigmoid")):
        dk, db = (w.astype(np.float64) for w in dense.get_weights())
        units = dk.shape[1]
        layers.append(
            {"kind": "dense", "input_dim": width, "units": units, "weights": {"kernel": dk.tolist(), "bias": db.tolist()}}
        )
        layers.append({"kind": act, "input_dim": units, "units": units})
        width = units
    return {
        "name": f"top_tagging_{cell}",
        "layers": layers,
        "metadata": {"trained_on": "binary_seq", "train_seed": 1, "validation_seed": 2, "validation_auc": round(auc, 4)},
    }


def main():
    train, val, out = sys.argv[1], sys.argv[2], Path(sys.argv[3])
    tf.keras.utils.set_random_seed(7)
    xt, yt = load(train)
    xv, yv = load(val)
    out.mkdir(parents=True, exist_ok=True)
    for cell in ("lstm", "gru"):
        model = build(cell)
        model.compile(optimizer=tf.keras.optimizers.Adam(3e-3), loss="binary_crossentropy")
        model.fit(xt, yt, batch_size=256, epochs=20, validation_data=(xv, yv), verbose=2)
        auc = float(roc_auc_score(yv, model.predict(xv, verbose=0).ravel()))
        print(f"{cell}: validation AUC {auc:.4f}")
        (out / f"top_tagging_{cell}.json").write_text(json.dumps(export(model, cell, auc)) + "\n")


if __name__ == "__main__":
    main()
