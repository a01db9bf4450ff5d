"""Deterministic training loops for the appearance and geometry branches.

Every loop follows the same contract: sample order is a pure function of
(seed, epoch), the learning rate follows the constant-then-linear-decay
schedule, metrics are logged one tab-separated line per step in a fixed
column order with the total equal to the weighted sum of its logged
components, checkpoints are written at the configured cadence, and a
non-finite loss aborts with the last good checkpoint.
"""

from __future__ import annotations

import functools
import math
from pathlib import Path

import numpy as np
import torch

from ..atn import (
    EyeEncoder,
    NoseBranch,
    RegionTranslator,
    build_nose_branch,
    build_region_translator,
)
from ..errors import Diverged, EmptyDataset
from ..facegeom.encode import GeoAttributes, MeanGeo
from ..facegeom.landmarks import RegionKind
from ..gtn import ATTRIBUTES, SubGan, build_sub_gan, geo_to_vectors
from ..imaging import from_unit, to_unit
from ..losses import atn_objective, characteristic_loss, cycle_loss, gtn_objective, lsgan_loss, sp_loss, ss_loss
from ..networks import EyeEncoderNet, NoseCritic, NoseDecoder, init_weights
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, lr_schedule


def _flush_denormals(fn):
    """Flush subnormal floats for the duration of a training loop (they cost
    ~35% CPU conv throughput) and restore the FPU mode afterwards so the
    process-wide float environment is untouched outside training."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        torch.set_flush_denormal(True)
        try:
            return fn(*args, **kwargs)
        finally:
            torch.set_flush_denormal(False)
    return wrapper


class MetricsLog:
    """Tab-separated step log with a fixed column order."""

    def __init__(self, path: Path, columns: list[str]):
        self.path = Path(path)
        self.columns = columns
        self.rows: list[list[float]] = []
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w")
        self._fh.write("#" + "\t".join(columns) + "\n")

    def log(self, values: dict[str, float]) -> None:
        row = [float(values[c]) for c in self.columns]
        self.rows.append(row)
        self._fh.write("\t".join(f"{v:.17g}" for v in row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def column(self, name: str) -> np.ndarray:
        return np.asarray([r[self.columns.index(name)] for r in self.rows])

    @staticmethod
    def read(path) -> tuple[list[str], np.ndarray]:
        lines = Path(path).read_text().splitlines()
        columns = lines[0].lstrip("#").split("\t")
        data = np.asarray([[float(v) for v in ln.split("\t")] for ln in lines[1:]])
        return columns, data


def _epoch_batch(n: int, batch: int, step: int, steps_per_epoch: int,
                 seed: int, stream: int) -> np.ndarray:
    """Deterministic batch indices: a fresh permutation per (seed, epoch,
    stream), read out modularly within the epoch."""
    epoch, pos = divmod(step, steps_per_epoch)
    rng = np.random.default_rng((seed, epoch, stream))
    perm = rng.permutation(n)
    take = (pos * batch + np.arange(batch)) % n
    return perm[take]


def _set_lr(optimizers, lr: float) -> None:
    for opt in optimizers:
        for group in opt.param_groups:
            group["lr"] = lr


def _check_finite(values: dict[str, float], last_ckpt: Path | None) -> None:
    bad = [k for k, v in values.items() if not math.isfinite(v)]
    if bad:
        raise Diverged(f"non-finite loss terms {bad}", str(last_ckpt) if last_ckpt else None)


def _total_steps(cfg: TrainConfig, steps_per_epoch: int) -> int:
    full = (cfg.epochs_constant + cfg.epochs_decay) * steps_per_epoch
    return min(cfg.max_steps, full) if cfg.max_steps > 0 else full


# --- appearance branch -------------------------------------------------------

ATN_COLUMNS = ["step", "epoch", "lr", "adv_m", "adv_p", "cyc", "sp_f", "sp_b", "ss",
               "total", "g_adv_m", "g_adv_p"]


def atn_plans(t: RegionTranslator) -> dict[str, dict]:
    return {"g_m": t.g_m.spec.to_dict(), "g_p": t.g_p.spec.to_dict(),
            "d_m": t.d_m.spec.to_dict(), "d_p": t.d_p.spec.to_dict(),
            "phi": t.phi.spec.to_dict()}


def save_region_checkpoint(path, t: RegionTranslator, cfg: TrainConfig) -> Path:
    states = {"g_m": t.g_m.state_dict(), "g_p": t.g_p.state_dict(),
              "d_m": t.d_m.state_dict(), "d_p": t.d_p.state_dict()}
    extra = {"region": t.region.value, "resolution": t.resolution}
    return save_checkpoint(path, "atn", atn_plans(t), states, cfg.config_hash(), extra)


def load_region_translator(path) -> RegionTranslator:
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    extra = blob.get("extra", {})
    t = build_region_translator(RegionKind(extra["region"]), int(extra["resolution"]))
    blob = load_checkpoint(path, "atn", atn_plans(t))
    for name, net in (("g_m", t.g_m), ("g_p", t.g_p), ("d_m", t.d_m), ("d_p", t.d_p)):
        net.load_state_dict(blob["states"][name])
    t.trained = True
    return t


@_flush_denormals
def train_region_translator(photo: np.ndarray, manga: np.ndarray, cfg: TrainConfig,
                            out_dir, region: RegionKind = RegionKind.EYE_LEFT,
                            encoder=None, ckpt_name: str | None = None,
                            ) -> tuple[RegionTranslator, Path]:
    """Cycle-coupled adversarial training of one region translator.

    `photo` and `manga` are (N, H, W) arrays on the [0, 255] gray scale; the
    photo side should already be encoder-preprocessed when an encoder is
    configured for the region.
    """
    if photo.ndim != 3 or manga.ndim != 3 or len(photo) == 0 or len(manga) == 0:
        raise EmptyDataset("need non-empty (N, H, W) photo and manga arrays")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)

    t = build_region_translator(region, cfg.region_resolution, cfg.seed, encoder=encoder)
    p_all = to_unit(torch.from_numpy(photo.astype(np.float32))).unsqueeze(1)
    m_all = to_unit(torch.from_numpy(manga.astype(np.float32))).unsqueeze(1)

    betas = (cfg.adam_beta1, cfg.adam_beta2)
    opt_g = torch.optim.Adam(list(t.g_m.parameters()) + list(t.g_p.parameters()),
                             lr=cfg.lr_initial, betas=betas)
    opt_dm = torch.optim.Adam(t.d_m.parameters(), lr=cfg.lr_initial, betas=betas)
    opt_dp = torch.optim.Adam(t.d_p.parameters(), lr=cfg.lr_initial, betas=betas)

    steps_per_epoch = max(1, math.ceil(max(len(p_all), len(m_all)) / cfg.batch_size))
    total = _total_steps(cfg, steps_per_epoch)
    name = ckpt_name or region.value.lower()
    log = MetricsLog(out_dir / f"metrics_{name}.tsv", ATN_COLUMNS)
    ckpt_path = out_dir / f"{name}.pt"
    last_ckpt: Path | None = None
    w = cfg.atn_weights
    ss_params = cfg.ss_params

    for step in range(total):
        epoch = step // steps_per_epoch
        lr = lr_schedule(epoch, cfg)
        _set_lr((opt_g, opt_dm, opt_dp), lr)

        p = p_all[_epoch_batch(len(p_all), cfg.batch_size, step, steps_per_epoch, cfg.seed, 0)]
        m = m_all[_epoch_batch(len(m_all), cfg.batch_size, step, steps_per_epoch, cfg.seed, 1)]

        fake_m = t.g_m(p)
        fake_p = t.g_p(m)

        # discriminators first (manga side, then photo side)
        opt_dm.zero_grad()
        adv_m = lsgan_loss(t.d_m(m), t.d_m(fake_m.detach()))
        adv_m.backward()
        opt_dm.step()

        opt_dp.zero_grad()
        adv_p = lsgan_loss(t.d_p(p), t.d_p(fake_p.detach()))
        adv_p.backward()
        opt_dp.step()

        # both generators jointly; cycle and similarity distances run on the
        # network's unit scale (the convention of the cited translation
        # lineage: on the raw gray scale their magnitudes at lambda/alpha 1
        # crush the smoothing term and the ablation direction disappears),
        # while the smoothing loss keeps its gray-scale definition
        opt_g.zero_grad()
        rec_p = t.g_p(fake_m)
        rec_m = t.g_m(fake_p)
        g_adv_m = ((t.d_m(fake_m) - 1.0) ** 2).mean()
        g_adv_p = ((t.d_p(fake_p) - 1.0) ** 2).mean()
        fake_m255, fake_p255 = from_unit(fake_m), from_unit(fake_p)
        cyc = cycle_loss(p, m, rec_p, rec_m)
        sp_f = sp_loss(p, fake_m, t.phi(p), t.phi(fake_m), cfg.sp_weights)
        sp_b = sp_loss(m, fake_p, t.phi(m), t.phi(fake_p), cfg.sp_weights)
        ss = ss_loss(fake_m255.clamp(0.0, 255.0), fake_p255.clamp(0.0, 255.0), ss_params)
        g_loss = (g_adv_m + g_adv_p + w.alpha1 * cyc + w.alpha2 * sp_f
                  + w.alpha3 * sp_b + w.alpha4 * ss)
        g_loss.backward()
        opt_g.step()

        parts = {"adv_m": adv_m.item(), "adv_p": adv_p.item(), "cyc": cyc.item(),
                 "sp_f": sp_f.item(), "sp_b": sp_b.item(), "ss": ss.item()}
        total_loss = float(atn_objective(parts["adv_m"], parts["adv_p"], parts["cyc"],
                                         parts["sp_f"], parts["sp_b"], parts["ss"], w))
        values = {"step": step, "epoch": epoch, "lr": lr, **parts, "total": total_loss,
                  "g_adv_m": g_adv_m.item(), "g_adv_p": g_adv_p.item()}
        _check_finite({k: v for k, v in values.items() if k not in ("step", "epoch")},
                      last_ckpt)
        log.log(values)

        if (step + 1) % cfg.checkpoint_every == 0:
            last_ckpt = save_region_checkpoint(ckpt_path, t, cfg)

    t.trained = True
    last_ckpt = save_region_checkpoint(ckpt_path, t, cfg)
    log.close()
    return t, last_ckpt


@_flush_denormals
def train_eye_encoder(photo: np.ndarray, target: np.ndarray, cfg: TrainConfig,
                      out_dir) -> tuple[EyeEncoder, Path]:
    """Supervised pretraining of the eye encoder on paired (photo crop,
    binary portrait crop) data; mean L1 on the unit scale."""
    if len(photo) == 0 or photo.shape != target.shape:
        raise EmptyDataset("paired eye corpus must be non-empty and aligned")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed + 77)
    net = init_weights(EyeEncoderNet(cfg.region_resolution), cfg.seed + 77)
    x = to_unit(torch.from_numpy(photo.astype(np.float32))).unsqueeze(1)
    y = to_unit(torch.from_numpy(target.astype(np.float32))).unsqueeze(1)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr_initial,
                           betas=(cfg.adam_beta1, cfg.adam_beta2))
    log = MetricsLog(out_dir / "metrics_eye_encoder.tsv", ["step", "epoch", "lr", "l1"])
    steps_per_epoch = max(1, math.ceil(len(x) / cfg.batch_size))
    for step in range(cfg.pretrain_steps):
        epoch = step // steps_per_epoch
        idx = _epoch_batch(len(x), cfg.batch_size, step, steps_per_epoch, cfg.seed, 7)
        opt.zero_grad()
        loss = (net(x[idx]) - y[idx]).abs().mean()
        loss.backward()
        opt.step()
        log.log({"step": step, "epoch": epoch, "lr": cfg.lr_initial, "l1": loss.item()})
    log.close()
    path = save_checkpoint(out_dir / "eye_encoder.pt", "eye_encoder",
                           {"net": net.spec.to_dict()}, {"net": net.state_dict()},
                           cfg.config_hash(), {"resolution": cfg.region_resolution})
    return EyeEncoder("pretrained", net), path


def load_eye_encoder(path) -> EyeEncoder:
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    net = EyeEncoderNet(int(blob["extra"]["resolution"]))
    blob = load_checkpoint(path, "eye_encoder", {"net": net.spec.to_dict()})
    net.load_state_dict(blob["states"]["net"])
    return EyeEncoder("pretrained", net)


# --- nose branch --------------------------------------------------------------

NOSE_COLUMNS = ["step", "epoch", "lr", "phase", "vae_rec", "vae_kl", "adv_d", "adv_g"]


def nose_plans(b: NoseBranch) -> dict[str, dict]:
    return {"encoder": b.encoder.spec.to_dict(), "generator": b.generator.spec.to_dict()}


def save_nose_checkpoint(path, b: NoseBranch, cfg: TrainConfig) -> Path:
    states = {"encoder": b.encoder.state_dict(), "generator": b.generator.state_dict()}
    return save_checkpoint(path, "nose", nose_plans(b), states, cfg.config_hash(),
                           {"resolution": b.resolution})


def load_nose_branch(path) -> NoseBranch:
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    b = build_nose_branch(int(blob["extra"]["resolution"]))
    blob = load_checkpoint(path, "nose", nose_plans(b))
    b.encoder.load_state_dict(blob["states"]["encoder"])
    b.generator.load_state_dict(blob["states"]["generator"])
    b.trained = True
    return b


@_flush_denormals
def train_nose_branch(photo_noses: np.ndarray, manga_noses: np.ndarray,
                      cfg: TrainConfig, out_dir) -> tuple[NoseBranch, Path]:
    """Two phases sharing the schedule: a variational autoencoder on photo
    noses (the seed path) and adversarial training of the latent-seeded
    generator on manga noses."""
    if len(photo_noses) == 0 or len(manga_noses) == 0:
        raise EmptyDataset("nose training needs photo and manga nose crops")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed + 31)
    b = build_nose_branch(cfg.nose_resolution, cfg.seed)
    decoder = init_weights(NoseDecoder(cfg.nose_resolution), cfg.seed + 12)
    critic = init_weights(NoseCritic(cfg.nose_resolution), cfg.seed + 13)

    x_photo = to_unit(torch.from_numpy(photo_noses.astype(np.float32))).unsqueeze(1)
    x_manga = to_unit(torch.from_numpy(manga_noses.astype(np.float32))).unsqueeze(1)
    betas = (cfg.adam_beta1, cfg.adam_beta2)
    opt_vae = torch.optim.Adam(list(b.encoder.parameters()) + list(decoder.parameters()),
                               lr=cfg.lr_initial, betas=betas)
    opt_g = torch.optim.Adam(b.generator.parameters(), lr=cfg.lr_initial, betas=betas)
    opt_d = torch.optim.Adam(critic.parameters(), lr=cfg.lr_initial, betas=betas)

    log = MetricsLog(out_dir / "metrics_nose.tsv", NOSE_COLUMNS)
    ckpt_path = out_dir / "nose.pt"
    last_ckpt: Path | None = None
    gen_rng = torch.Generator().manual_seed(cfg.seed + 41)

    spe_vae = max(1, math.ceil(len(x_photo) / cfg.batch_size))
    vae_steps = _total_steps(cfg, spe_vae)
    for step in range(vae_steps):
        epoch = step // spe_vae
        lr = lr_schedule(epoch, cfg)
        _set_lr((opt_vae,), lr)
        idx = _epoch_batch(len(x_photo), cfg.batch_size, step, spe_vae, cfg.seed, 20)
        x = x_photo[idx]
        opt_vae.zero_grad()
        mean, logvar = b.encoder(x)
        noise = torch.randn(mean.shape, generator=gen_rng)
        z = mean + torch.exp(0.5 * logvar) * noise
        rec = decoder(z)
        rec_loss = ((rec - x) ** 2).mean()
        kl = (-0.5 * (1.0 + logvar - mean**2 - torch.exp(logvar))).mean()
        (rec_loss + 1e-3 * kl).backward()
        opt_vae.step()
        values = {"step": step, "epoch": epoch, "lr": lr, "phase": 0,
                  "vae_rec": rec_loss.item(), "vae_kl": kl.item(), "adv_d": 0.0, "adv_g": 0.0}
        _check_finite({"vae_rec": values["vae_rec"], "vae_kl": values["vae_kl"]}, last_ckpt)
        log.log(values)

    spe_gan = max(1, math.ceil(len(x_manga) / cfg.batch_size))
    gan_steps = _total_steps(cfg, spe_gan)
    for step in range(gan_steps):
        epoch = step // spe_gan
        lr = lr_schedule(epoch, cfg)
        _set_lr((opt_g, opt_d), lr)
        idx = _epoch_batch(len(x_manga), cfg.batch_size, step, spe_gan, cfg.seed, 21)
        real = x_manga[idx]
        z = torch.randn((cfg.batch_size, 512), generator=gen_rng)
        fake = b.generator(z)
        opt_d.zero_grad()
        adv_d = lsgan_loss(critic(real), critic(fake.detach()))
        adv_d.backward()
        opt_d.step()
        opt_g.zero_grad()
        adv_g = ((critic(fake) - 1.0) ** 2).mean()
        adv_g.backward()
        opt_g.step()
        values = {"step": vae_steps + step, "epoch": epoch, "lr": lr, "phase": 1,
                  "vae_rec": 0.0, "vae_kl": 0.0, "adv_d": adv_d.item(), "adv_g": adv_g.item()}
        _check_finite({"adv_d": values["adv_d"], "adv_g": values["adv_g"]}, last_ckpt)
        log.log(values)
        if (step + 1) % cfg.checkpoint_every == 0:
            b.trained = True
            last_ckpt = save_nose_checkpoint(ckpt_path, b, cfg)

    b.trained = True
    last_ckpt = save_nose_checkpoint(ckpt_path, b, cfg)
    log.close()
    return b, last_ckpt


# --- geometry branch -----------------------------------------------------------

GTN_COLUMNS = ["step", "epoch", "lr"] + [
    f"{attr}_{part}" for attr in ATTRIBUTES
    for part in ("adv_p", "adv_m", "cyc", "cha_p", "cha_m")
] + ["total"] + [f"{attr}_g_adv" for attr in ATTRIBUTES]


def gtn_plans(gans: dict[str, SubGan], hidden: int) -> dict[str, dict]:
    return {attr: {"attribute": attr, "io_dim": gans[attr].io_dim, "hidden": hidden}
            for attr in ATTRIBUTES}


def _mean_from_vectors(geos: list[GeoAttributes]) -> MeanGeo:
    from ..facegeom.encode import FaceShape, LocVector, SizeVector
    loc = np.stack([g.loc.values for g in geos]).mean(axis=0)
    siz = np.stack([g.siz.values for g in geos]).mean(axis=0)
    sha = np.stack([g.shape.points for g in geos]).mean(axis=0)
    return MeanGeo(LocVector(loc), SizeVector(siz), FaceShape(sha), len(geos))


def save_gtn_checkpoint(path, gans: dict[str, SubGan], cfg: TrainConfig,
                        photo_mean: MeanGeo, manga_mean: MeanGeo) -> Path:
    from .ingest import meangeo_to_dict
    states = {}
    for attr, sg in gans.items():
        states[f"{attr}_g_lm"] = sg.g_lm.state_dict()
        states[f"{attr}_g_lp"] = sg.g_lp.state_dict()
        states[f"{attr}_d_lm"] = sg.d_lm.state_dict()
        states[f"{attr}_d_lp"] = sg.d_lp.state_dict()
    extra = {"hidden": cfg.fc_hidden,
             "photo_mean": meangeo_to_dict(photo_mean),
             "manga_mean": meangeo_to_dict(manga_mean)}
    return save_checkpoint(path, "gtn", gtn_plans(gans, cfg.fc_hidden), states,
                           cfg.config_hash(), extra)


def load_gtn(path) -> tuple[dict[str, SubGan], MeanGeo, MeanGeo]:
    from .ingest import meangeo_from_dict
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    hidden = int(blob["extra"]["hidden"])
    gans = {attr: build_sub_gan(attr, hidden) for attr in ATTRIBUTES}
    blob = load_checkpoint(path, "gtn", gtn_plans(gans, hidden))
    for attr, sg in gans.items():
        sg.g_lm.load_state_dict(blob["states"][f"{attr}_g_lm"])
        sg.g_lp.load_state_dict(blob["states"][f"{attr}_g_lp"])
        sg.d_lm.load_state_dict(blob["states"][f"{attr}_d_lm"])
        sg.d_lp.load_state_dict(blob["states"][f"{attr}_d_lp"])
        sg.trained = True
    return gans, meangeo_from_dict(blob["extra"]["photo_mean"]), \
        meangeo_from_dict(blob["extra"]["manga_mean"])


@_flush_denormals
def train_gtn(photo: list[GeoAttributes], manga: list[GeoAttributes],
              cfg: TrainConfig, out_dir,
              photo_mean: MeanGeo | None = None,
              manga_mean: MeanGeo | None = None) -> tuple[dict[str, SubGan], Path]:
    """Joint adversarial training of the three attribute sub-GANs."""
    if not photo or not manga:
        raise EmptyDataset("geometry training needs photo and manga encodings")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed + 5)

    photo_mean = photo_mean or _mean_from_vectors(photo)
    manga_mean = manga_mean or _mean_from_vectors(manga)
    xp = {a: torch.from_numpy(np.stack([geo_to_vectors(g)[a] for g in photo]).astype(np.float32))
          for a in ATTRIBUTES}
    xm = {a: torch.from_numpy(np.stack([geo_to_vectors(g)[a] for g in manga]).astype(np.float32))
          for a in ATTRIBUTES}
    mean_p = {a: torch.from_numpy(geo_to_vectors(
        GeoAttributes(photo_mean.loc, photo_mean.siz, photo_mean.shape))[a].astype(np.float32))
        for a in ATTRIBUTES}
    mean_m = {a: torch.from_numpy(geo_to_vectors(
        GeoAttributes(manga_mean.loc, manga_mean.siz, manga_mean.shape))[a].astype(np.float32))
        for a in ATTRIBUTES}

    gans = {a: build_sub_gan(a, cfg.fc_hidden, cfg.seed) for a in ATTRIBUTES}
    betas = (cfg.adam_beta1, cfg.adam_beta2)
    d_params = [p for sg in gans.values() for net in (sg.d_lm, sg.d_lp)
                for p in net.parameters()]
    g_params = [p for sg in gans.values() for net in (sg.g_lm, sg.g_lp)
                for p in net.parameters()]
    opt_d = torch.optim.Adam(d_params, lr=cfg.lr_initial, betas=betas)
    opt_g = torch.optim.Adam(g_params, lr=cfg.lr_initial, betas=betas)

    n_p, n_m = len(photo), len(manga)
    steps_per_epoch = max(1, math.ceil(max(n_p, n_m) / cfg.batch_size))
    total = _total_steps(cfg, steps_per_epoch)
    log = MetricsLog(out_dir / "metrics_gtn.tsv", GTN_COLUMNS)
    ckpt_path = out_dir / "gtn.pt"
    last_ckpt: Path | None = None
    w = cfg.gtn_weights
    betas_cyc_cha = {"loc": (w.beta1, w.beta2), "siz": (w.beta3, w.beta4),
                     "sha": (w.beta5, w.beta6)}

    for step in range(total):
        epoch = step // steps_per_epoch
        lr = lr_schedule(epoch, cfg)
        _set_lr((opt_d, opt_g), lr)
        ip = _epoch_batch(n_p, cfg.batch_size, step, steps_per_epoch, cfg.seed, 2)
        im = _epoch_batch(n_m, cfg.batch_size, step, steps_per_epoch, cfg.seed, 3)

        fakes = {}
        parts: dict[str, float] = {}
        d_loss = torch.zeros(())
        for a in ATTRIBUTES:
            sg = gans[a]
            bp, bm = xp[a][ip], xm[a][im]
            fake_m = sg.g_lm(bp)
            fake_p = sg.g_lp(bm)
            fakes[a] = (bp, bm, fake_m, fake_p)
            adv_m = lsgan_loss(sg.d_lm(bm), sg.d_lm(fake_m.detach()))
            adv_p = lsgan_loss(sg.d_lp(bp), sg.d_lp(fake_p.detach()))
            parts[f"{a}_adv_m"] = adv_m.item()
            parts[f"{a}_adv_p"] = adv_p.item()
            d_loss = d_loss + adv_m + adv_p
        opt_d.zero_grad()
        d_loss.backward()
        opt_d.step()

        g_loss = torch.zeros(())
        g_advs = {}
        for a in ATTRIBUTES:
            sg = gans[a]
            bp, bm, fake_m, fake_p = fakes[a]
            rec_p = sg.g_lp(fake_m)
            rec_m = sg.g_lm(fake_p)
            g_adv = ((sg.d_lm(fake_m) - 1.0) ** 2).mean() + ((sg.d_lp(fake_p) - 1.0) ** 2).mean()
            cyc = cycle_loss(bp, bm, rec_p, rec_m)
            cha_m = characteristic_loss(bp, fake_m, mean_p[a], mean_m[a])
            cha_p = characteristic_loss(bm, fake_p, mean_m[a], mean_p[a])
            b_cyc, b_cha = betas_cyc_cha[a]
            g_loss = g_loss + g_adv + b_cyc * cyc + b_cha * (cha_m + cha_p)
            parts[f"{a}_cyc"] = cyc.item()
            parts[f"{a}_cha_m"] = cha_m.item()
            parts[f"{a}_cha_p"] = cha_p.item()
            g_advs[f"{a}_g_adv"] = g_adv.item()
        opt_g.zero_grad()
        g_loss.backward()
        opt_g.step()

        total_loss = float(gtn_objective(parts, w))
        values = {"step": step, "epoch": epoch, "lr": lr, **parts,
                  "total": total_loss, **g_advs}
        _check_finite({k: v for k, v in values.items() if k not in ("step", "epoch")},
                      last_ckpt)
        log.log(values)
        if (step + 1) % cfg.checkpoint_every == 0:
            for sg in gans.values():
                sg.trained = True
            last_ckpt = save_gtn_checkpoint(ckpt_path, gans, cfg, photo_mean, manga_mean)

    for sg in gans.values():
        sg.trained = True
    last_ckpt = save_gtn_checkpoint(ckpt_path, gans, cfg, photo_mean, manga_mean)
    log.close()
    return gans, last_ckpt
