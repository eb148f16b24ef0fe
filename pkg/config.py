"""
Configuration for the MNL best-arm identification toolkit
"""
import os
from dotenv import load_dotenv

load_dotenv()


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, default))


def _env_int(name: str, default: int) -> int:
    return int(float(os.getenv(name, default)))


class Config:
    """Application configuration"""

    # Logging
    LOG_LEVEL = os.getenv("MNL_BAI_LOG_LEVEL", "INFO")
    LOG_FORMAT = os.getenv("MNL_BAI_LOG_FORMAT", "text").lower()

    # Expensive invariant checks on the design state (Sherman-Morrison drift,
    # quadratic-form monotonicity) at every update
    DEBUG_CHECKS = os.getenv("MNL_BAI_DEBUG_CHECKS", "False").lower() == "true"

    # Estimator
    REG_LAMBDA = _env_float("MNL_BAI_REG_LAMBDA", 1e-4)
    MLE_TOL = _env_float("MNL_BAI_MLE_TOL", 1e-8)
    MLE_MAX_ITER = _env_int("MNL_BAI_MLE_MAX_ITER", 100)

    # Design
    RIDGE = _env_float("MNL_BAI_RIDGE", 1e-4)
    REFRESH_EVERY = _env_int("MNL_BAI_REFRESH_EVERY", 1000)

    # Confidence / stopping
    KAPPA_ALPHA = _env_float("MNL_BAI_KAPPA_ALPHA", 0.5)
    DELTA = _env_float("MNL_BAI_DELTA", 0.05)

    # Algorithms
    EXPLORE_STEPS = _env_int("MNL_BAI_EXPLORE_STEPS", 5)
    BATCH_ALPHA = _env_float("MNL_BAI_BATCH_ALPHA", 0.25)
    MAX_STEPS = _env_int("MNL_BAI_MAX_STEPS", 5_000_000)

    # Experiment harness
    JOBS = _env_int("MNL_BAI_JOBS", 1)
    OUTPUT_DIR = os.getenv("MNL_BAI_OUTPUT_DIR", "results")

    @classmethod
    def get_settings(cls):
        """Get a snapshot of the current configuration"""
        return {
            "log_level": cls.LOG_LEVEL,
            "log_format": cls.LOG_FORMAT,
            "debug_checks": cls.DEBUG_CHECKS,
            "estimator": {
                "reg_lambda": cls.REG_LAMBDA,
                "tol": cls.MLE_TOL,
                "max_iter": cls.MLE_MAX_ITER,
            },
            "design": {
                "ridge": cls.RIDGE,
                "refresh_every": cls.REFRESH_EVERY,
            },
            "confidence": {
                "kappa_alpha": cls.KAPPA_ALPHA,
                "delta": cls.DELTA,
            },
            "algorithms": {
                "explore_steps": cls.EXPLORE_STEPS,
                "batch_alpha": cls.BATCH_ALPHA,
                "max_steps": cls.MAX_STEPS,
            },
            "harness": {
                "jobs": cls.JOBS,
                "output_dir": cls.OUTPUT_DIR,
            },
        }

    @classmethod
    def print_status(cls):
        """Print configuration banner"""
        settings = cls.get_settings()

        print("=" * 70)
        print("MNL Best-Arm Identification - Configuration")
        print("=" * 70)
        print(f"Log level: {settings['log_level']} ({settings['log_format']})")
        print(f"Debug checks: {'ON' if settings['debug_checks'] else 'off'}")
        print()
        est = settings["estimator"]
        print(f"MLE: lambda={est['reg_lambda']:g}  tol={est['tol']:g}  max_iter={est['max_iter']}")
        des = settings["design"]
        print(f"Design: ridge={des['ridge']:g}  dense refresh every {des['refresh_every']} updates")
        conf = settings["confidence"]
        print(f"Stopping rule: kappa_alpha={conf['kappa_alpha']:g}  delta={conf['delta']:g}")
        alg = settings["algorithms"]
        print(
            f"Runs: t'={alg['explore_steps']}  alpha={alg['batch_alpha']:g}  "
            f"max_steps={alg['max_steps']}"
        )
        print(f"Workers: {settings['harness']['jobs']}")
        print("=" * 70)


# Create global config instance
config = Config()

if __name__ == "__main__":
    config.print_status()
