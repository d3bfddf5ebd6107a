/** Orbit camera with orthographic projection onto the canvas. */

import { Vec3 } from "./editor.js";

export class OrbitCamera {
  yaw = 0.35;
  pitch = -0.25;
  zoom = 1;
  center: Vec3 = [0, 0, 0];
  viewWidth = 1;

  fitTo(lo: Vec3, hi: Vec3): void {
    this.center = [(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2];
    this.viewWidth = Math.max(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) * 1.4;
  }

  private rotation(): number[] {
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    // row-major camera rotation: yaw about +y then pitch about +x
    return [
      cy, 0, sy,
      sy * sp, cp, -cy * sp,
      -sy * cp, sp, cy * cp,
    ];
  }

  scale(width: number): number {
    return (width / this.viewWidth) * this.zoom;
  }

  /** world -> [screenX, screenY, depth] */
  project(p: Vec3, width: number, height: number): Vec3 {
    const r = this.rotation();
    const x = p[0] - this.center[0];
    const y = p[1] - this.center[1];
    const z = p[2] - this.center[2];
    const cx = r[0] * x + r[1] * y + r[2] * z;
    const cyy = r[3] * x + r[4] * y + r[5] * z;
    const cz = r[6] * x + r[7] * y + r[8] * z;
    const f = this.scale(width);
    return [width / 2 + f * cx, height / 2 - f * cyy, cz];
  }

  /** screen-space motion -> world displacement in the camera-facing plane */
  worldDelta(dx: number, dy: number, width: number): Vec3 {
    const r = this.rotation();
    const f = this.scale(width);
    const cx = dx / f;
    const cy = -dy / f;
    // transpose of the rotation applied to (cx, cy, 0)
    return [
      r[0] * cx + r[3] * cy,
      r[1] * cx + r[4] * cy,
      r[2] * cx + r[5] * cy,
    ];
  }
}
