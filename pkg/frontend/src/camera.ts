// World-fit camera with zoom: world coordinates (meters, y up) to canvas
// pixels (y down). The whole world stays visible; no free pan.

export interface Camera {
  scale: number; // px per meter
  offsetX: number;
  offsetY: number;
  canvasH: number;
}

export function fitCamera(
  worldW: number,
  worldH: number,
  canvasW: number,
  canvasH: number,
  zoom = 1.0,
): Camera {
  const scale = Math.min(canvasW / worldW, canvasH / worldH) * zoom;
  return {
    scale,
    offsetX: (canvasW - worldW * scale) / 2,
    offsetY: (canvasH - worldH * scale) / 2,
    canvasH,
  };
}

export function toScreen(cam: Camera, x: number, y: number): [number, number] {
  return [cam.offsetX + x * cam.scale, cam.canvasH - (cam.offsetY + y * cam.scale)];
}
