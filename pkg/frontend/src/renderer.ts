// Thin canvas painter: replays a draw list. All geometry decisions happen in
// drawlist.ts; this file only touches the 2D context.

import type { Primitive } from "./drawlist.js";

export function paint(ctx: CanvasRenderingContext2D, width: number, height: number,
                      list: Primitive[]): void {
  ctx.fillStyle = "#1e272e";
  ctx.fillRect(0, 0, width, height);
  for (const item of list) {
    switch (item.kind) {
      case "line":
        ctx.strokeStyle = item.color;
        ctx.lineWidth = 1;
        ctx.beginPath();
        ctx.moveTo(item.x1, item.y1);
        ctx.lineTo(item.x2, item.y2);
        ctx.stroke();
        break;
      case "poly":
        ctx.fillStyle = item.fill;
        ctx.beginPath();
        ctx.moveTo(item.points[0][0], item.points[0][1]);
        for (let i = 1; i < item.points.length; i += 1) {
          ctx.lineTo(item.points[i][0], item.points[i][1]);
        }
        ctx.closePath();
        ctx.fill();
        break;
      case "point":
        ctx.fillStyle = item.color;
        ctx.beginPath();
        ctx.arc(item.x, item.y, item.radius, 0, Math.PI * 2);
        ctx.fill();
        break;
    }
  }
}
