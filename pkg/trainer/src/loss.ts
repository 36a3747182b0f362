/** Segmentation loss: soft Dice plus binary cross-entropy, equally weighted. */

import * as tf from "@tensorflow/tfjs";

const SMOOTH = 1.0;
const EPS = 1e-7;

export function diceLoss(target: tf.Tensor, pred: tf.Tensor): tf.Tensor {
    return tf.tidy(() => {
        const inter = tf.sum(tf.mul(target, pred));
        const denom = tf.add(tf.sum(target), tf.sum(pred));
        const dice = tf.div(tf.add(tf.mul(inter, 2), SMOOTH), tf.add(denom, SMOOTH));
        return tf.sub(1, dice);
    });
}

export function bceLoss(target: tf.Tensor, pred: tf.Tensor): tf.Tensor {
    return tf.tidy(() => {
        const p = tf.clipByValue(pred, EPS, 1 - EPS);
        const perVoxel = tf.add(
            tf.mul(target, tf.log(p)),
            tf.mul(tf.sub(1, target), tf.log(tf.sub(1, p))),
        );
        return tf.neg(tf.mean(perVoxel));
    });
}

export function diceBceLoss(target: tf.Tensor, pred: tf.Tensor): tf.Scalar {
    return tf.tidy(() => tf.add(diceLoss(target, pred), bceLoss(target, pred)) as tf.Scalar);
}
